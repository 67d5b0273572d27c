"""Command-line entry point: ``mlpcm <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 internal failure. Failures print ``error: <stage>: <detail>`` on stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, stages
from .device import DeviceParams
from .errors import PcmError
from .mlp import TrainConfig, predict, read_model
from .dataset import read_scaler
from .thermal import ThermalParams
from .traces import DEFAULT_LENGTH

TRACE_FORMAT = """\
trace files: UTF-8 text, optional first line '# pcm-trace v1', then one
record per line 'CYCLE OP ADDRESS DATA' (CYCLE decimal, OP R or W,
ADDRESS and DATA '0x' + 16 hex digits). manifest.csv lists
file,ratio_r,ratio_w,reads,writes,seed."""

CONFIG_FORMAT = """\
config file: one 'Key Value' per line, ';' starts a comment. Keys: CLK,
BusWidth, DeviceWidth, CPUFreq, MLCLevels, MEM_CTL, AddressMappingScheme,
ReadQueueSize, WriteQueueSize, EnduranceModel, EnduranceDist,
EnduranceDistMean, EnduranceDistVariance, WordBits, TrackedCellsPerBank,
BitConductance, ReadLatencyNs, ReadEnergyPj, NumBanks, ThermalEnable,
AmbientK, ThermalG, ThermalH, ThermalTref. Unknown keys are warned about."""

DATASET_FORMAT = """\
dataset.csv: row_id,set_v,set_t_ns,reset_v,reset_t_ns,trace_id,reads,
writes,total_write_energy_pj,total_energy_pj,total_write_latency_ns,
total_latency_ns,endurance_per_bank (failed rows have empty targets)."""

ENCODED_FORMAT = """\
encoded.csv: row_id,f0..f13,t_energy,t_latency,t_endurance,split with
split in {train,val,test}; scaler.csv: name,mean,std."""

MODEL_FORMAT = """\
model.txt: 'pcm-mlp v1 seed=<u64>', then per head 'head <name> layers=<n>'
and per layer 'layer <i> <rows> <cols>', <rows> lines of weights and one
line of biases. history.csv: epoch,train_loss,val_loss,lr."""

EVAL_FORMAT = """\
summary.csv: output,mape_percent,n (endurance, write_latency,
write_energy); regression_<head>.csv: actual,predicted."""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _existing(text: str) -> Path:
    p = Path(text)
    if not p.exists():
        raise argparse.ArgumentTypeError(f"{text} does not exist")
    return p


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    parser = _Parser(prog="mlpcm", description=__doc__, formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"mlpcm {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)

    def add(name, help_, epilog):
        p = sub.add_parser(name, help=help_, description=help_, epilog=epilog, formatter_class=fmt)
        p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                       help="log progress to stderr")
        return p

    p = add("gen-traces", "generate the 60-trace corpus", TRACE_FORMAT)
    p.add_argument("--seed", type=_u64, default=0, help="corpus base seed (default 0)")
    p.add_argument("--out", type=Path, required=True, help="output directory for traces and manifest.csv")
    p.add_argument("--length", type=_positive_int, default=DEFAULT_LENGTH,
                   help=f"operations per trace (default {DEFAULT_LENGTH})")

    p = add("sweep", "simulate every grid point on every trace", CONFIG_FORMAT + "\n\n" + DATASET_FORMAT)
    p.add_argument("--grid", choices=["full"], default="full", help="parameter grid (only 'full', 81 points)")
    p.add_argument("--traces", type=_existing, required=True, help="trace directory from gen-traces")
    p.add_argument("--config", type=_existing, help="simulator config file (defaults built in)")
    p.add_argument("--seed", type=_u64, default=0, help="base seed for per-row simulation seeds")
    p.add_argument("--out", type=Path, required=True, help="output directory for dataset.csv")
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes (output order is fixed)")

    p = add("preprocess", "one-hot encode, split 60/20/20 and standardize", DATASET_FORMAT + "\n\n" + ENCODED_FORMAT)
    p.add_argument("--dataset", type=_existing, required=True, help="dataset.csv from sweep")
    p.add_argument("--seed", type=_u64, default=0, help="split seed")
    p.add_argument("--out", type=Path, required=True, help="output directory for encoded.csv and scaler.csv")

    p = add("train", "train the three-headed MLP", ENCODED_FORMAT + "\n\n" + MODEL_FORMAT)
    p.add_argument("--encoded", type=_existing, required=True, help="encoded.csv from preprocess")
    p.add_argument("--scaler", type=_existing, help="scaler.csv (default: next to --encoded)")
    p.add_argument("--seed", type=_u64, default=0, help="initialization and batch-order seed")
    p.add_argument("--out", type=Path, required=True, help="output directory for model.txt and history.csv")
    p.add_argument("--max-epochs", type=_positive_int, default=TrainConfig.max_epochs)
    p.add_argument("--batch-size", type=_positive_int, default=TrainConfig.batch_size)

    p = add("evaluate", "test-split MAPE and regression scatter data", ENCODED_FORMAT + "\n\n" + EVAL_FORMAT)
    p.add_argument("--model", type=_existing, required=True, help="model.txt from train")
    p.add_argument("--encoded", type=_existing, required=True, help="encoded.csv from preprocess")
    p.add_argument("--scaler", type=_existing, help="scaler.csv (default: next to --encoded)")
    p.add_argument("--out", type=Path, required=True, help="output directory for summary and scatter CSVs")
    p.add_argument("--plot-script", action="store_true", help="also write plot_regression.py")

    p = add("predict", "predict write energy, write latency and endurance", MODEL_FORMAT)
    p.add_argument("--model", type=_existing, required=True, help="model.txt from train")
    p.add_argument("--scaler", type=_existing, help="scaler.csv (default: next to --model)")
    p.add_argument("--set-v", type=float, required=True, help="SET voltage, V (1.5, 2.0, 2.5)")
    p.add_argument("--set-t", type=float, required=True, help="SET pulse, ns (150, 155, 160)")
    p.add_argument("--reset-v", type=float, required=True, help="RESET voltage, V (2.5, 3.0, 3.5)")
    p.add_argument("--reset-t", type=float, required=True, help="RESET pulse, ns (100, 105, 110)")
    p.add_argument("--reads", type=int, required=True, help="total reads in the trace")
    p.add_argument("--writes", type=int, required=True, help="total writes in the trace")

    p = add("thermal-table", "RESET power density and energy scale over a temperature range",
            "thermal.csv: t_kelvin,power_density_mw_cm2,scale")
    p.add_argument("--out", type=Path, required=True, help="output directory for thermal.csv")
    p.add_argument("--t-min", type=float, default=250.0, help="first temperature, K")
    p.add_argument("--t-max", type=float, default=400.0, help="last temperature, K")
    p.add_argument("--step", type=float, default=10.0, help="temperature step, K")
    p.add_argument("--g", type=float, default=ThermalParams.g, help="intercept, MW/cm^2")
    p.add_argument("--h", type=float, default=ThermalParams.h, help="slope, MW/(cm^2 K)")
    p.add_argument("--t-ref", type=float, default=ThermalParams.t_ref, help="reference temperature, K")

    p = add("pipeline", "run every stage in order from one base seed",
            "\n\n".join([TRACE_FORMAT, CONFIG_FORMAT, DATASET_FORMAT, ENCODED_FORMAT, MODEL_FORMAT, EVAL_FORMAT]))
    p.add_argument("--seed", type=_u64, default=0, help="base seed for every stage")
    p.add_argument("--out", type=Path, required=True, help="run directory")
    p.add_argument("--config", type=_existing, help="simulator config file (defaults built in)")
    p.add_argument("--jobs", type=_positive_int, default=1, help="sweep worker processes")
    p.add_argument("--length", type=_positive_int, default=DEFAULT_LENGTH, help="operations per trace")
    p.add_argument("--max-epochs", type=_positive_int, default=TrainConfig.max_epochs)
    return parser


def _run(args) -> None:
    cmd = args.command
    if cmd == "gen-traces":
        stages.gen_traces(args.out, args.seed, args.length)
    elif cmd == "sweep":
        stages.sweep(args.traces, args.out, args.seed, args.config, args.jobs)
    elif cmd == "preprocess":
        stages.preprocess(args.dataset, args.out, args.seed)
    elif cmd == "train":
        scaler = args.scaler or args.encoded.parent / stages.SCALER_FILE
        cfg = TrainConfig(batch_size=args.batch_size, max_epochs=args.max_epochs, seed=args.seed)
        stages.train_stage(args.encoded, scaler, args.out, cfg)
    elif cmd == "evaluate":
        scaler = args.scaler or args.encoded.parent / stages.SCALER_FILE
        stages.evaluate_stage(args.model, args.encoded, scaler, args.out, args.plot_script)
    elif cmd == "predict":
        scaler = read_scaler(args.scaler or args.model.parent / stages.SCALER_FILE)
        params = DeviceParams(args.set_v, args.set_t, args.reset_v, args.reset_t)
        energy, latency, endurance = predict(read_model(args.model), scaler, params, args.reads, args.writes)
        print(f"write_energy_pj {energy!r}")
        print(f"write_latency_ns {latency!r}")
        print(f"endurance_writes {endurance!r}")
    elif cmd == "thermal-table":
        stages.thermal_stage(args.out, args.t_min, args.t_max, args.step,
                             ThermalParams(args.g, args.h, args.t_ref))
    elif cmd == "pipeline":
        stages.pipeline(args.out, args.seed, args.config, args.jobs, args.length,
                        TrainConfig(seed=args.seed, max_epochs=args.max_epochs))


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    stage = next((a for a in argv if not a.startswith("-")), "mlpcm")
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
    except UsageError as exc:
        print(f"error: {stage}: {exc}", file=sys.stderr)
        return 1
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    try:
        _run(args)
    except (PcmError, ValueError, FileNotFoundError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - last-resort reporting
        print(f"error: {args.command}: internal failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
