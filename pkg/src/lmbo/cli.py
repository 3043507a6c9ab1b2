"""Command line entry point: ``lmbo tune|train|eval|predict --config FILE``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .data import DataError
from .harness import ConfigError, RunConfig, cmd_eval, cmd_predict, cmd_train, cmd_tune, format_report
from .kernels import SingularCorrelationError

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lmbo", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["tune", "train", "eval", "predict"])
    p.add_argument("--config", required=True, help="run configuration (JSON)")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--model", help="model document for eval/predict")
    p.add_argument("--input", help="rows to predict (predict only)")
    p.add_argument("--split", default="all", choices=["all", "train", "val", "test"],
                   help="rows to evaluate (eval only)")
    p.add_argument("--resume", action="store_true", help="replay an existing trial log (tune only)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            # command-line paths are relative to the working directory
            cfg.out = str(Path(args.out).resolve())
        model_path = str(Path(args.model).resolve()) if args.model else None
        input_path = str(Path(args.input).resolve()) if args.input else None
        if args.command == "tune":
            _, report = cmd_tune(cfg, resume=args.resume)
            print(format_report(report), end="")
        elif args.command == "train":
            model = cmd_train(cfg)
            for split, m in model.metrics.items():
                print(f"{split:<6} MSE={m['mse']:.6g} RMSE={m['rmse']:.6g} MAPE={m['mape']:.4f}%")
            print(f"epochs={len(model.history) - 1} best_epoch={model.best_epoch} params={model.n_params}")
        elif args.command == "eval":
            res = cmd_eval(cfg, model_path, args.split)
            print(json.dumps(res, indent=1, sort_keys=True))
        else:
            pred = cmd_predict(cfg, model_path, input_path)
            np.savetxt(sys.stdout, pred, fmt="%.10g", delimiter=",")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SingularCorrelationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
