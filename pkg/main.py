#!/usr/bin/env python3
"""
Moran Lab - Command Line
- Run a saved config:   python main.py --config run.json
- Or use inline flags:  python main.py spectrum gen --preset cantor --kind canonical --level 8
- Exit codes: 0 ok, 1 config error, 2 validation error, 3 a check found a counterexample
"""

import argparse
import json
import sys
from typing import Any, Dict, List, Optional

from config_loader import SPECTRUM_KINDS, VERIFY_CHECKS, build_run_config, load_settings, parse_config
from lab_errors import ConfigError, MoranLabError
from logger_config import get_system_logger, log_error
from moran_lab import MoranLab, exit_code_for

logger = get_system_logger()


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_system_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("system")
    group.add_argument("--preset", help="cantor, mixed or bernoulli-<k>")
    group.add_argument("--b", type=_int_list, help="periodic bases, e.g. 4 or 4,6")
    group.add_argument("--q", type=_int_list, help="periodic digit counts, e.g. 2 or 2,3")
    group.add_argument("--bound", type=int, help="declared bound M on the bases")


def _add_spectrum_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--kind", choices=SPECTRUM_KINDS, default="canonical")
    parser.add_argument("--t", help="target dimension (exact decimal, or 'ue' for kind=dimension)")
    parser.add_argument("--signs", type=_int_list, help="periodic sign pattern, e.g. 1,-1")
    parser.add_argument("--bits", help="bit string for continuum samples")
    parser.add_argument("--seed", type=int, help="seed extending the bit string")
    parser.add_argument("--level", type=int, help="level view: indices with k_n + s_n <= level")
    parser.add_argument("--max-index", type=int, dest="max_index", help="index view: indices 0..N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Moran spectral measure lab")
    parser.add_argument("--config", help="run config JSON (replaces the subcommand flags)")
    parser.add_argument("--settings", help="lab settings file (default: config.json)")
    parser.add_argument("--output-dir", dest="output_dir", help="override the output directory")
    parser.add_argument("--threads", type=int, help="override the worker thread count")
    parser.add_argument("--echo", action="store_true", help="print the resolved config")
    commands = parser.add_subparsers(dest="group")

    dims = commands.add_parser("dims", help="entropy and Hausdorff dimension reports")
    _add_system_flags(dims)
    dims.add_argument("--depth", type=int)

    spectrum = commands.add_parser("spectrum", help="generate or verify spectra")
    spectrum_actions = spectrum.add_subparsers(dest="action", required=True)
    gen = spectrum_actions.add_parser("gen", help="generate a spectrum truncation")
    _add_system_flags(gen)
    _add_spectrum_flags(gen)
    verify = spectrum_actions.add_parser("verify", help="verify a spectrum truncation")
    _add_system_flags(verify)
    _add_spectrum_flags(verify)
    verify.add_argument("--check", choices=VERIFY_CHECKS, default="orthogonality")
    verify.add_argument("--xi", type=_float_list, help="completeness samples in [0, 1)")
    verify.add_argument("--K", type=int, help="Fourier factors beyond each frequency's top index")
    verify.add_argument("--tree-depth", type=int, dest="tree_depth")

    dim = commands.add_parser("dim", help="dimension estimates")
    dim_actions = dim.add_subparsers(dest="action", required=True)
    beurling = dim_actions.add_parser("beurling", help="Beurling dimension estimate")
    _add_system_flags(beurling)
    _add_spectrum_flags(beurling)
    beurling.add_argument("--scales", default="natural", help="natural, dyadic or a list like 4,16,64")
    beurling.add_argument("--max-scales", type=int, dest="max_scales")
    entropy = dim_actions.add_parser("entropy", help="entropy dimension estimate")
    _add_system_flags(entropy)
    entropy.add_argument("--level", type=int)
    entropy.add_argument("--dyadic", type=_int_list, dest="dyadic_levels")

    fourier = commands.add_parser("fourier", help="Fourier transform probes")
    fourier_actions = fourier.add_subparsers(dest="action", required=True)
    probe = fourier_actions.add_parser("probe", help="|mu^(B_k)| non-decay probe")
    _add_system_flags(probe)
    probe.add_argument("--kmax", type=int)
    probe.add_argument("--K-extra", type=int, dest="K_extra")

    ims = commands.add_parser("ims", help="integer Moran set")
    ims.add_argument("--n", type=_int_list, required=True, help="periodic n_k")
    ims.add_argument("--m", type=_int_list, required=True, help="periodic m_k")
    ims.add_argument("--t", type=_int_list, required=True, help="periodic t_k")
    ims.add_argument("--depth", type=int)
    return parser


_COMMAND_NAMES = {
    ("dims", None): "dims",
    ("spectrum", "gen"): "spectrum-gen",
    ("spectrum", "verify"): "spectrum-verify",
    ("dim", "beurling"): "dim-beurling",
    ("dim", "entropy"): "dim-entropy",
    ("fourier", "probe"): "fourier-probe",
    ("ims", None): "ims",
}

_PARAMETER_FLAGS = (
    "depth", "kind", "t", "signs", "bits", "seed", "level", "max_index", "check", "xi", "K",
    "tree_depth", "scales", "max_scales", "dyadic_levels", "kmax", "K_extra",
)


def config_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Build a run config object from inline flags"""
    command = _COMMAND_NAMES.get((args.group, getattr(args, "action", None)))
    if command is None:
        raise ConfigError("no command given (use a subcommand or --config)", "command")

    data: Dict[str, Any] = {"command": command, "parameters": {}}
    if command == "ims":
        for key in ("n", "m", "t"):
            data["parameters"][key] = {"kind": "periodic", "values": getattr(args, key)}
        if args.depth is not None:
            data["parameters"]["depth"] = args.depth
        return data

    if args.preset:
        data["system"] = {"preset": args.preset}
    elif args.b and args.q:
        data["system"] = {"b": {"kind": "periodic", "values": args.b},
                          "q": {"kind": "periodic", "values": args.q}}
        if args.bound is not None:
            data["system"]["bound"] = args.bound
    else:
        raise ConfigError("give --preset or both --b and --q", "system")

    for key in _PARAMETER_FLAGS:
        value = getattr(args, key, None)
        if value is None:
            continue
        if key == "scales" and value not in ("natural", "dyadic"):
            try:
                value = _int_list(value)
            except argparse.ArgumentTypeError as e:
                raise ConfigError(str(e), "parameters.scales")
        data["parameters"][key] = value
    return data


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = load_settings(args.settings)
        overrides = {k: getattr(args, k) for k in ("output_dir", "threads") if getattr(args, k) is not None}
        settings = settings.updated(overrides, "flags")

        if args.config:
            cfg = parse_config(args.config, settings)
        else:
            cfg = build_run_config(config_from_args(args), settings)
        if args.echo:
            print(json.dumps(cfg.resolved(), indent=2, default=str))

        # Run limits come from the config; execution settings from the flags
        limits = cfg.limits.updated({"output_dir": settings.output_dir, "threads": settings.threads})
        MoranLab(limits).run_command(cfg)
        return 0

    except KeyboardInterrupt:
        print("\n🛑 Stopped by user")
        return 130
    except MoranLabError as e:
        log_error(f"{type(e).__name__}: {e}", exc_info=False)
        print(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        print(f"❌ Fatal error: {e}")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
