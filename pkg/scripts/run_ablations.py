#!/usr/bin/env python3
"""Ablation sweep: train every Net1-Net7 variant on a small synthetic set.

Reports per-variant parameter totals and final train accuracy, mirroring
the structural toggles (S&R, TCN, residual, top-k, multiscale pooling).

Usage: python scripts/run_ablations.py [--seed N] [--out DIR] [--epochs N]
"""

import argparse

from csanet.cli import ABLATION_NETS, apply_ablation
from csanet.config import ModelConfig, RunConfig, SplitSpec, SynthSpec, TrainConfig
from csanet.model import count_parameters
from csanet.train import train_run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=707)
    parser.add_argument("--out", default="runs/ablations")
    parser.add_argument("--epochs", type=int, default=20)
    args = parser.parse_args()

    base = RunConfig(
        synth=SynthSpec(n_per_class=8, channels=8, time_steps=256, n_classes=4, snr=3.0),
        model=ModelConfig(channels=8, time_steps=256, n_classes=4),
        split=SplitSpec(strategy="none"),
        train=TrainConfig(epochs=args.epochs, batch_size=32),
        seed=args.seed,
        out_dir=args.out,
    )

    print(f"{'net':<6} {'params':>8} {'eff.batch':>9} {'train_acc':>9}")
    for net in sorted(ABLATION_NETS):
        variant = apply_ablation(base, net)
        variant.out_dir = f"{args.out}/{net}"
        result = train_run(variant)
        total = count_parameters(variant.model)["total"]
        print(f"{net:<6} {total:>8d} {result.effective_batch:>9d} {result.final_train_acc:>9.3f}")


if __name__ == "__main__":
    main()
