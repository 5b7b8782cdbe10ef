"""Command-line entry point.

Exit codes: 0 success, 2 usage, 3 data or protocol error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import kvdoc
from .config import ExperimentConfig
from .cpu import MachineState, run
from .dataset import read_dataset, write_dataset
from .errors import OhmscopeError
from .isa import assemble, listing
from .pipeline import acquire_dataset, run_pipeline, synth_dataset

log = logging.getLogger("ohmscope")

EXIT_USAGE = 2
EXIT_DATA = 3


def _load_config(path, **overrides) -> ExperimentConfig:
    config = ExperimentConfig.load(path) if path else ExperimentConfig()
    return config.with_overrides(**overrides)


def cmd_assemble(args):
    src = Path(args.src)
    try:
        text = src.read_text()
    except OSError as exc:
        raise OhmscopeError(f"cannot read {src}: {exc}") from None
    program = assemble(text, args.isa)
    if len(program) == 0:
        log.warning("%s contains no instructions; writing an empty program", src)
    stem = Path(args.output) if args.output else src.with_suffix("")
    stem.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{stem}.bin").write_bytes(program.to_bytes())
    Path(f"{stem}.manifest").write_text(kvdoc.dump({
        "isa": program.isa.value,
        "words": str(len(program)),
        "word_bytes": "4",
        "source": src.name,
    }, "ohmscope program manifest"))
    Path(f"{stem}.lst").write_text(listing(program))
    print(f"{len(program)} word(s) -> {stem}.bin")
    return 0


def cmd_simulate(args):
    program = assemble(Path(args.src).read_text(), args.isa)
    state, events = run(MachineState.reset(program.isa, program), program, args.max_steps)
    for e in events:
        print(f"{e.step_index:5d}  pc {e.pc_before:3d} -> {e.pc_after:3d}  {e.mnemonic:<5} "
              f"toggles {e.hamming_toggle}")
    print("halted" if state.halted else f"stopped after {len(events)} steps")
    print("registers " + " ".join(f"R{i}={v}" for i, v in enumerate(state.registers)))
    print(f"Z={state.zero_flag}")
    return 0


def cmd_synth(args):
    config = _load_config(args.config, isa=args.isa, per_class=args.per_class, sigma=args.sigma,
                          dataset_seed=args.seed)
    ds = synth_dataset(config)
    write_dataset(ds, args.out)
    print(f"{len(ds)} traces x {ds.grid.points} points -> {args.out}")
    return 0


def cmd_acquire(args):
    config = _load_config(args.config, per_class=args.per_class)
    ds = acquire_dataset(config, args.endpoint, args.timeout)
    write_dataset(ds, args.out)
    print(f"{len(ds)} traces acquired from {args.endpoint} -> {args.out}")
    return 0


def cmd_run(args):
    config = _load_config(args.config, classifier=args.classifier)
    ds = read_dataset(args.dataset)
    if ds.isa.value != config.isa:
        log.info("using dataset ISA %s instead of config ISA %s", ds.isa.value, config.isa)
        config = config.with_overrides(isa=ds.isa.value)
    result = run_pipeline(ds, config, args.out)
    r = result.report
    print(f"{config.classifier}: accuracy {r.overall_accuracy:.4f} "
          f"(macro {r.accuracy:.4f}), validation {r.validation_score:.4f}, "
          f"{len(result.selected)} frequencies, {result.n_components} components -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ohmscope",
                                     description="Impedance side-channel instruction analysis.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assemble", help="assemble a source file")
    p.add_argument("src")
    p.add_argument("--isa", default="FPGA12", choices=["FPGA12", "ATMEGA"])
    p.add_argument("-o", "--output", help="output stem (default: source path without suffix)")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("simulate", help="assemble and execute a source file")
    p.add_argument("src")
    p.add_argument("--isa", default="FPGA12", choices=["FPGA12", "ATMEGA"])
    p.add_argument("--max-steps", type=int, default=10_000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synth-dataset", help="synthesize a labeled trace dataset")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--isa", choices=["FPGA12", "ATMEGA"])
    p.add_argument("--per-class", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--seed", type=int, help="dataset seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("acquire", help="record a dataset from a (mock) network analyzer")
    p.add_argument("--endpoint", required=True, help="host:port")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int)
    p.add_argument("--timeout", type=float, default=10.0)
    p.set_defaults(func=cmd_acquire)

    p = sub.add_parser("run-pipeline", help="select, project, classify and report")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--classifier", choices=["SVM_LINEAR", "SVM_QUAD", "KNN", "LDA", "GNB"])
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except OhmscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
