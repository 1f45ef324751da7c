"""Measure real encode commands and survive interruptions.

The runner shells out to an encoder template once per task, times the
process, and appends one CSV row per success. Here a short sleep stands in
for the encoder so the demo runs anywhere; swap the template for ffmpeg or
x264 to measure real encodes.

Run:  python3 demos/measure_with_runner.py
"""

import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from corpus_eta.corpus import Clip, Corpus, expand_tasks
from corpus_eta.runner import CommandTemplate, batch_encode


def tiny_corpus():
    clips = tuple(Clip(clip_id=f"clip{i}", source_group="demo", width=1280,
                       height=720, framerate=Fraction(30), num_frames=60,
                       E=40.0 + i, h=5.0, luma=100.0) for i in range(2))
    tasks = tuple(expand_tasks(clips, encoders=("x264",), presets=("medium",),
                               cqps=(22, 32)))
    return Corpus(clips=clips, tasks=tasks, times=None)


def main():
    corpus = tiny_corpus()
    template = CommandTemplate(
        f"{sys.executable} -c 'import time; time.sleep(0.2)' "
        "{input} {output} {preset} {cqp}")
    print("command template (tokens fill in per task):")
    print(f"  {template.template}\n")

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        input_dir = root / "inputs"
        input_dir.mkdir()
        for clip in corpus.clips:
            (input_dir / f"{clip.clip_id}.yuv").write_bytes(b"\x00")
        times_path = root / "times.csv"

        summary = batch_encode(corpus, template, input_dir, times_path,
                               root / "scratch", tasks=corpus.tasks[:3])
        print(f"first session, interrupted early: ran {summary.succeeded} "
              f"of {len(corpus.tasks)} tasks")

        summary = batch_encode(corpus, template, input_dir, times_path,
                               root / "scratch")
        print(f"second session resumes: skipped {summary.skipped} already "
              f"measured, ran {summary.succeeded} more\n")

        print("measurements (one row per task, appended as each finishes):")
        print(times_path.read_text().strip())

    print("\nFeed this CSV to `corpus-eta predict` while the batch is still")
    print("running to get a live estimate of the time remaining.")


if __name__ == "__main__":
    main()
