#!/usr/bin/env python3
"""Overfit sanity run: the default model on a 4-class synthetic set.

Trains on 32 trials/class (8 channels, 256 steps, SNR 3) and stops as
soon as eval-mode train accuracy reaches 95%. A healthy build converges
within a handful of epochs.

Usage: python scripts/run_overfit.py [--seed N] [--out DIR] [--epochs N]
"""

import argparse
import time

from csanet.config import ModelConfig, RunConfig, SplitSpec, SynthSpec, TrainConfig
from csanet.train import train_run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=606)
    parser.add_argument("--out", default="runs/overfit")
    parser.add_argument("--epochs", type=int, default=300)
    parser.add_argument("--target", type=float, default=0.95)
    args = parser.parse_args()

    run = RunConfig(
        synth=SynthSpec(n_per_class=32, channels=8, time_steps=256, n_classes=4, snr=3.0),
        model=ModelConfig(channels=8, time_steps=256, n_classes=4),
        split=SplitSpec(strategy="none"),
        train=TrainConfig(epochs=args.epochs, batch_size=64),
        seed=args.seed,
        out_dir=args.out,
    )
    start = time.time()

    def on_epoch(epoch, loss, acc):
        print(f"epoch {epoch:3d}  loss {loss:.4f}  train_acc {acc:.3f}  ({time.time() - start:.0f}s)")

    result = train_run(run, stop_at_train_acc=args.target, on_epoch=on_epoch)
    verdict = "reached" if result.final_train_acc >= args.target else "MISSED"
    print(
        f"{verdict} {args.target:.0%} target: {result.final_train_acc:.1%} after "
        f"{result.epochs_run} epochs in {time.time() - start:.0f}s"
    )
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"log: {result.log_path}")


if __name__ == "__main__":
    main()
