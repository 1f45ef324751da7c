"""Shared factories for building small corpora in tests."""

from fractions import Fraction

from corpus_eta.corpus import Clip, Corpus, TimeRecord, expand_tasks


def make_clip(clip_id="clip0", width=1920, height=1080, framerate=30,
              num_frames=300, E=50.0, h=5.0, luma=100.0, source_group="g0"):
    return Clip(clip_id=clip_id, width=width, height=height,
                framerate=Fraction(framerate), num_frames=num_frames,
                E=E, h=h, luma=luma, source_group=source_group)


def make_clips(n, rng=None, num_groups=2):
    """n clips with varied features; deterministic when rng is given."""
    clips = []
    for i in range(n):
        if rng is None:
            e_val, h_val, luma = 10.0 * (i + 1), 2.0 * (i + 1), 40.0 + (i % 200)
            width, height, fps, frames = 1280, 720, 30, 60 + 10 * i
        else:
            e_val = float(rng.uniform(1.0, 400.0))
            h_val = float(rng.uniform(0.5, 80.0))
            luma = float(rng.uniform(16.0, 235.0))
            width, height = (1280, 720) if rng.integers(2) else (1920, 1080)
            fps = int(rng.choice([24, 30, 60]))
            frames = int(rng.integers(48, 240))
        clips.append(make_clip(clip_id=f"clip{i:03d}", width=width, height=height,
                               framerate=fps, num_frames=frames, E=e_val, h=h_val,
                               luma=luma, source_group=f"g{i % num_groups}"))
    return clips


def make_corpus(n_clips=4, encoders=("x264",), presets=("ultrafast", "medium", "veryslow"),
                cqps=(22, 27, 32, 37), times=None, rng=None, num_groups=2):
    clips = make_clips(n_clips, rng=rng, num_groups=num_groups)
    tasks = expand_tasks(clips, encoders, presets, cqps)
    return Corpus(clips=tuple(clips), tasks=tuple(tasks), times=times)


def with_constant_times(corpus, seconds):
    times = {t.task_id: TimeRecord(task_id=t.task_id, seconds=seconds)
             for t in corpus.tasks}
    return Corpus(clips=corpus.clips, tasks=corpus.tasks, times=times)


def with_random_times(corpus, rng, low=0.5, high=50.0):
    times = {t.task_id: TimeRecord(task_id=t.task_id,
                                   seconds=float(rng.uniform(low, high)))
             for t in corpus.tasks}
    return Corpus(clips=corpus.clips, tasks=corpus.tasks, times=times)
