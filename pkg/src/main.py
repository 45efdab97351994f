"""
Command-line entry point of the subconvexity workbench.

    python main.py [global flags] <verb> [verb flags]

Verbs: verify <target>, eval-l, sweep, decompose, list. The JSON report
goes to stdout, structured events to stderr. Exit status: 0 when every
asserted residual is within tolerance, 1 on a tolerance violation or any
other workbench error, 2 on usage or configuration errors.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

# Load environment variables from the repository .env
env_path = Path(__file__).resolve().parent.parent / ".env"
load_dotenv(env_path)

from models.runs import CheckInfo, ErrorReport  # noqa: E402
from services.checks import VERIFY_TARGETS, check_registry  # noqa: E402
from services.config import load_config  # noqa: E402
from services.errors import ConfigError, WorkbenchError  # noqa: E402
from services.run_orchestrator import get_orchestrator  # noqa: E402
from services.run_store import dump_json  # noqa: E402

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

# global flag -> settings key
SETTING_FLAGS = {
    "threads": "threads",
    "epsilon": "epsilon",
    "n_max": "n_max",
    "seed": "seed",
    "fit_safety": "fit_safety",
    "out_dir": "out_dir",
    "runs_dir": "runs_dir",
}

# verb flag -> check parameter
VERIFY_FLAGS = ["qmax", "nmax", "weight_qmax", "limit", "q", "a", "scale", "max", "N", "K", "t", "Q", "draws"]


def _add_global_options(parser: argparse.ArgumentParser, default: Any) -> None:
    parser.add_argument("--config", type=Path, default=default, help="key=value or JSON config file")
    parser.add_argument("--threads", type=int, default=default, help="Worker threads")
    parser.add_argument("--epsilon", type=float, default=default, help="Value of every t^eps factor")
    parser.add_argument("--n-max", dest="n_max", type=int, default=default, help="Coefficient cache length")
    parser.add_argument("--seed", type=int, default=default, help="Seed for random draws")
    parser.add_argument("--fit-safety", dest="fit_safety", type=float, default=default)
    parser.add_argument("--out-dir", dest="out_dir", default=default, help="CSV and script output directory")
    parser.add_argument("--runs-dir", dest="runs_dir", default=default, help="RunRecord directory")
    parser.add_argument("--set", dest="settings", action="append", default=default, metavar="KEY=VALUE",
                        help="Override any config key")
    parser.add_argument("--refit", action="store_true", default=default, help="Refit calibration constants")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="workbench", description="Numerical workbench for GL(2) subconvexity")
    _add_global_options(parser, None)

    # globals are accepted after the verb too; SUPPRESS keeps the subparser from resetting them
    common = argparse.ArgumentParser(add_help=False)
    _add_global_options(common, argparse.SUPPRESS)

    verbs = parser.add_subparsers(dest="verb", metavar="verb")
    verbs.required = True

    verify = verbs.add_parser("verify", parents=[common], help="Run one verification target")
    verify.add_argument("target", choices=VERIFY_TARGETS)
    verify.add_argument("--qmax", type=int)
    verify.add_argument("--nmax", type=int)
    verify.add_argument("--weight-qmax", dest="weight_qmax", type=int)
    verify.add_argument("--limit", type=int)
    verify.add_argument("--q", type=int)
    verify.add_argument("--a", type=int)
    verify.add_argument("--scale", type=int)
    verify.add_argument("--max", type=int)
    verify.add_argument("--N", type=float)
    verify.add_argument("--K", type=float)
    verify.add_argument("--t", type=float)
    verify.add_argument("--Q", type=float)
    verify.add_argument("--draws", type=int)

    eval_l = verbs.add_parser("eval-l", parents=[common], help="Evaluate L(1/2 + it)")
    eval_l.add_argument("--t", type=float, required=True)

    sweep = verbs.add_parser("sweep", parents=[common], help="Convexity-ratio sweep over a t-grid")
    sweep.add_argument("--tmin", type=float, default=10.0)
    sweep.add_argument("--tmax", type=float, default=200.0)
    sweep.add_argument("--points", type=int, default=20)
    sweep.add_argument("--plot", action="store_true", help="Emit a gnuplot script next to the CSV")

    decompose = verbs.add_parser("decompose", parents=[common], help="S(N) = S+ + S- at desk scale")
    decompose.add_argument("--N", type=float, default=60.0)
    decompose.add_argument("--K", type=float, default=8.0)
    decompose.add_argument("--t", type=float, default=100.0)
    decompose.add_argument("--Q", type=float)
    decompose.add_argument("--partner", action="store_true", help="Also check the conjugate partner at t = 0")

    verbs.add_parser("list", parents=[common], help="List registered checks")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {key: getattr(args, flag, None) for flag, key in SETTING_FLAGS.items()}
    for item in getattr(args, "settings", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _invocation(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """(check_id, params, command label) for the parsed verb."""
    if args.verb == "verify":
        check = check_registry.get(args.target)
        accepted = set(check.input_schema.get("required", [])) | set(check.input_schema.get("optional", []))
        given = {flag: getattr(args, flag) for flag in VERIFY_FLAGS if getattr(args, flag) is not None}
        rejected = sorted(set(given) - accepted)
        if rejected:
            parser.error(f"verify {args.target} does not take --{', --'.join(rejected)}")
        return args.target, given, f"verify {args.target}"
    if args.verb == "eval-l":
        return "eval-l", {"t": args.t}, "eval-l"
    if args.verb == "sweep":
        params = {"tmin": args.tmin, "tmax": args.tmax, "points": args.points, "plot": args.plot}
        return "sweep", params, "sweep"
    params = {"N": args.N, "K": args.K, "t": args.t, "Q": args.Q, "partner": args.partner}
    return "decompose", params, "decompose"


def _report_error(error: WorkbenchError) -> None:
    report = ErrorReport(
        detail=str(error),
        error_code=error.error_code,
        run_id=error.run_id,
        residual=getattr(error, "residual", None),
    )
    print(dump_json(report.model_dump()))


def run(argv: Optional[List[str]] = None) -> int:
    """
    Execute one command line.

    Returns:
        Exit status (0 passed, 1 failed, 2 usage or configuration error)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.verb == "list":
        infos = [CheckInfo(**check.get_info()).model_dump() for check in check_registry.list_all(enabled_only=False)]
        print(dump_json(infos))
        return EXIT_PASSED

    try:
        check_id, params, command = _invocation(args, parser)
    except SystemExit as e:
        return int(e.code or EXIT_USAGE)

    try:
        loaded = load_config(args.config, overrides=_overrides(args))
        record, _ = get_orchestrator().invoke(
            check_id, params, loaded, refit=bool(getattr(args, "refit", False)), command=command
        )
    except ConfigError as e:
        _report_error(e)
        return EXIT_USAGE
    except WorkbenchError as e:
        _report_error(e)
        return EXIT_FAILED

    print(dump_json({
        "run_id": record.run_id,
        "command": record.command,
        "passed": record.passed,
        "results": record.results,
        "residuals": record.residuals,
        "tolerances": record.tolerances,
        "outputs": record.outputs,
        "ignored_keys": loaded.ignored_keys,
    }))
    return EXIT_PASSED


if __name__ == "__main__":
    sys.exit(run())
