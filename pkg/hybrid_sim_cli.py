#!/usr/bin/env python3
import argparse
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

from src.config.schema import load_problem, load_signal, parse_region
from src.core.errors import (
    BeyondHorizon,
    ConfigError,
    DimensionMismatch,
    FlowSetNotSplit,
    HorizonMismatch,
    HybridSimError,
    InvalidDomainError,
    IoFailure,
    NotAbsolutelyContinuous,
    NotOutputForm,
    PointNotInSet,
    SignalValidationError,
    UnsupportedSignalShape,
    UnsupportedVariant,
)
from src.core.run_manifest import build_manifest
from src.scenarios.registry import build_scenario, scenario_descriptions
from src.signals.signal_parser import parse_signal
from src.simulation.classification import COMPLETE_EVIDENCE, ENDS_WITH_FLOW, classify_termination
from src.simulation.report import SimConfig, Termination
from src.simulation.simulator import solve
from src.simulation.validation import validate_arc
from src.utils.export import export_report, load_arc, write_text
from src.utils.formatting import format_vector, pretty_json
from src.viability.margins import SamplerConfig, existence_over_region, output_form_existence, vc_ball_margin
from src.viability.probes import nontrivial_existence, vc_probe
from src.viability.tangent import vc_split, vc_tangent_ac, vc_tangent_continuous
from src.viability.verdict import certificate

# Load environment variables from .env file if present
load_dotenv()

logger = logging.getLogger("hybrid_sim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILS = 3
EXIT_INCONCLUSIVE = 4
EXIT_INTERNAL = 10

CHECKS = ("probe", "tangent-ac", "tangent-continuous", "split", "ball-margin")

# Bad inputs or a checker that does not apply to the chosen system
USAGE_ERRORS = (
    ConfigError,
    SignalValidationError,
    DimensionMismatch,
    InvalidDomainError,
    HorizonMismatch,
    BeyondHorizon,
    PointNotInSet,
    FlowSetNotSplit,
    NotOutputForm,
    NotAbsolutelyContinuous,
    UnsupportedSignalShape,
    UnsupportedVariant,
)


def parse_arguments(argv=None):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--scenario', type=str, help='Built-in scenario name (see "scenario list")')
    common.add_argument('--config', type=str, help='Problem file (JSON system, optional signal and solver settings)')
    common.add_argument('--c', type=float, help='Flow-set bound c for parametric scenarios')
    common.add_argument('--delta', type=float, help='Input half-width delta, W = [-delta, delta]')
    common.add_argument('--mode', type=str, choices=['E', 'AE'], help='Solution concept (default E)')
    common.add_argument('--priority', type=str, choices=['JumpPriority', 'FlowPriority', 'EnumerateBoth'],
                        help='C/D overlap rule (default: the scenario\'s own)')
    common.add_argument('--t-max', type=float, help='Flow time budget')
    common.add_argument('--j-max', type=int, help='Jump budget')
    common.add_argument('--output-dir', type=str, help='Directory for emitted files (env HYBRID_SIM_OUTPUT_DIR)')
    common.add_argument('--seed', type=int, help='Seed for randomized samplers')
    common.add_argument('--jobs', type=int, default=1, help='Worker threads for region sweeps')
    common.add_argument('--debug', action='store_true', help='Show detailed debug information')

    signal = argparse.ArgumentParser(add_help=False)
    signal.add_argument('--w', type=str, help='Input signal, e.g. "const:0.2" or a preset such as ex2-witness')
    signal.add_argument('--signal-file', type=str, help='Signal file (JSON or one mini-language line)')

    parser = argparse.ArgumentParser(description='Simulate hybrid systems with inputs and check viability conditions')
    sub = parser.add_subparsers(dest='command', required=True)

    simulate = sub.add_parser('simulate', parents=[common, signal], help='Build a solution and report how it ends')
    simulate.add_argument('--xi', type=str, required=True, help='Initial state, comma separated')
    simulate.add_argument('--format', type=str, choices=['json', 'csv', 'both'], default='both')

    existence = sub.add_parser('check-existence', parents=[common, signal], help='Nontrivial solution existence')
    existence.add_argument('--xi', type=str, help='Initial state, comma separated')
    existence.add_argument('--region', type=str, help='Box of initial states "lo:hi,..." for a region sweep')
    existence.add_argument('--resolution', type=int, default=21, help='Grid points per axis for --region')

    viability = sub.add_parser('check-viability', parents=[common, signal], help='Run one viability checker')
    viability.add_argument('--check', type=str, choices=CHECKS, required=True)
    viability.add_argument('--xi', type=str, required=True, help='Initial state, comma separated')
    viability.add_argument('--w1', type=str, help='Smooth input part for --check split')
    viability.add_argument('--eps', type=float, default=1e-2, help='Time window for the tangent checks')
    viability.add_argument('--u-radius', type=float, default=1e-2, help='Neighbourhood radius for the tangent checks')

    sub.add_parser('check-setcond', parents=[common], help='Output-form set condition')

    validate = sub.add_parser('validate-arc', parents=[common, signal], help='Check an arc file against the system')
    validate.add_argument('--arc', type=str, required=True, help='Arc file (report/arc JSON or CSV)')

    scenario = sub.add_parser('scenario', help='Built-in scenarios')
    scenario.add_argument('action', choices=['list'])
    scenario.add_argument('--debug', action='store_true', help='Show detailed debug information')

    return parser.parse_args(argv)


def configure_logging(debug):
    level = logging.DEBUG if debug else os.environ.get("HYBRID_SIM_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def parse_vector(text, what="xi"):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"Could not parse {what} from '{text}'")


def load_setup(args):
    """System, file-provided signal and base SimConfig for a run"""
    if args.config:
        system, signal, sim = load_problem(args.config)
    elif args.scenario:
        system, signal, sim = build_scenario(args.scenario, c=args.c, delta=args.delta), None, None
    else:
        raise ConfigError("Give --scenario or --config")
    base = SimConfig(priority=system.default_priority)
    if sim is not None:
        base = sim.to_config(base)
    return system, signal, base


def resolve_signal(args, system, file_signal, required=True, value_set=...):
    text = getattr(args, 'w', None)
    path = getattr(args, 'signal_file', None)
    value_set = system.input_set if value_set is ... else value_set
    if text and path:
        raise ConfigError("Give either --w or --signal-file, not both")
    if text:
        return parse_signal(text, value_set)
    if path:
        return load_signal(path, value_set)
    if file_signal is not None or not required:
        return file_signal
    raise ConfigError("An input signal is required (--w or --signal-file)")


def write_certificate(out_dir, condition, verdict, inputs):
    path = Path(out_dir) / f"certificate_{condition}.json"
    write_text(path, pretty_json(certificate(condition, verdict, inputs)) + "\n")
    return path


def verdict_exit(verdict):
    if verdict.holds:
        return EXIT_OK
    if verdict.fails:
        return EXIT_FAILS
    return EXIT_INCONCLUSIVE


def report_exit(report, classification):
    if report.termination.kind == Termination.DEAD_STATE:
        return EXIT_FAILS
    if classification in (COMPLETE_EVIDENCE, ENDS_WITH_FLOW):
        return EXIT_OK
    return EXIT_INCONCLUSIVE


def run_simulate(args, manifest, system, signal, cfg):
    xi = parse_vector(args.xi)
    result = solve(system, xi, signal, cfg)
    reports = result if isinstance(result, list) else [result]
    codes = []
    for k, report in enumerate(reports):
        classification = classify_termination(report, system, signal)
        stem = "report" if len(reports) == 1 else f"report_branch{k}"
        if args.format in ('json', 'both'):
            export_report(report, manifest.output_dir, 'json', stem,
                          system=system, signal=signal, classification=classification)
        if args.format in ('csv', 'both'):
            export_report(report, manifest.output_dir, 'csv', stem.replace("report", "arc"))
        term = report.termination
        cause = f" ({term.cause})" if term.cause else ""
        print(f"Result: {term.kind}{cause} at (t={term.t:.6g}, j={term.j}), "
              f"classification {classification}, final state {format_vector(report.arc.final_state)}")
        codes.append(report_exit(report, classification))
    return max(codes)


def run_check_existence(args, manifest, system, signal, cfg):
    if args.region:
        region = parse_region(args.region, system.state_dim)
        sampler = SamplerConfig(resolution=args.resolution, jobs=args.jobs, seed=manifest.seed)
        verdict = existence_over_region(system, region, cfg.mode, sampler)
        condition, inputs = "existence_over_region", [system.to_dict(), region.to_dict(), cfg.mode]
    elif args.xi:
        xi = parse_vector(args.xi)
        signal = resolve_signal(args, system, signal)
        verdict = nontrivial_existence(system, xi, signal, cfg.mode, cfg=cfg)
        condition, inputs = "nontrivial_existence", [system.to_dict(), xi, signal.to_dict(), cfg.mode]
    else:
        raise ConfigError("check-existence needs --xi or --region")
    path = write_certificate(manifest.output_dir, condition, verdict, inputs)
    print(f"Result: {verdict.status} ({verdict.method}), certificate {path}")
    return verdict_exit(verdict)


def run_check_viability(args, manifest, system, signal, cfg):
    xi = parse_vector(args.xi)
    needs_signal = args.check != 'ball-margin'
    # for the split check --w is the w2 part; W only bounds the full input
    split_part = args.check == 'split' and system.split is not None and system.split.n_w1 > 0
    signal = resolve_signal(args, system, signal, required=needs_signal,
                            value_set=None if split_part else ...)
    if args.check == 'probe':
        verdict = vc_probe(system, xi, signal, cfg.mode, cfg=cfg)
    elif args.check == 'tangent-ac':
        verdict = vc_tangent_ac(system, xi, signal, U_radius=args.u_radius, eps=args.eps)
    elif args.check == 'tangent-continuous':
        verdict = vc_tangent_continuous(system, xi, signal, eps=args.eps, U_radius=args.u_radius)
    elif args.check == 'split':
        if split_part and not args.w1:
            raise ConfigError(f"{system.name} has a smooth input part; give it with --w1")
        w1 = parse_signal(args.w1) if args.w1 else None
        verdict = vc_split(system, xi, w1, signal, U_radius=args.u_radius, eps=args.eps)
    else:
        verdict = vc_ball_margin(system, xi)
    inputs = [system.to_dict(), xi, None if signal is None else signal.to_dict(), args.check, cfg.mode]
    path = write_certificate(manifest.output_dir, args.check.replace('-', '_'), verdict, inputs)
    grid = " (grid-verified)" if verdict.holds and not verdict.certified else ""
    print(f"Result: {verdict.status}{grid} ({verdict.method}), certificate {path}")
    return verdict_exit(verdict)


def run_check_setcond(args, manifest, system, signal, cfg):
    verdict = output_form_existence(system)
    path = write_certificate(manifest.output_dir, "output_set_condition", verdict, [system.to_dict()])
    chain = verdict.details["chain"]
    print(f"Result: {verdict.status}, inclusion holds: {chain['holds']}, certificate {path}")
    return verdict_exit(verdict)


def run_validate_arc(args, manifest, system, signal, cfg):
    arc = load_arc(args.arc)
    signal = resolve_signal(args, system, signal)
    result = validate_arc(system, arc, signal, cfg.mode)
    path = Path(manifest.output_dir) / "validation.json"
    write_text(path, pretty_json(result.to_dict()) + "\n")
    print(f"Result: {'valid' if result.valid else 'invalid'} {cfg.mode}-solution, "
          f"{len(result.violations)} violations, details {path}")
    return EXIT_OK if result.valid else EXIT_FAILS


RUNNERS = {
    'simulate': run_simulate,
    'check-existence': run_check_existence,
    'check-viability': run_check_viability,
    'check-setcond': run_check_setcond,
    'validate-arc': run_validate_arc,
}


def run(args):
    if args.command == 'scenario':
        for name, description in scenario_descriptions().items():
            print(f"{name:10s} {description}")
        return EXIT_OK

    manifest = build_manifest(
        command=args.command,
        scenario=args.scenario,
        config_path=args.config,
        output_dir=args.output_dir,
        seed=args.seed,
        overrides={"mode": args.mode, "priority": args.priority, "t_max": args.t_max, "j_max": args.j_max},
    )
    system, signal, base = load_setup(args)
    cfg = manifest.config(base)
    logger.info("Running %s on %s (%s mode, %s)", args.command, manifest.source, cfg.mode, cfg.priority)
    code = RUNNERS[args.command](args, manifest, system, signal, cfg)
    write_text(Path(manifest.output_dir) / "manifest.json", pretty_json({**manifest.to_dict(), "exit": code}) + "\n")
    return code


def main(argv=None):
    args = parse_arguments(argv)
    configure_logging(args.debug)
    try:
        return run(args)
    except USAGE_ERRORS as e:
        print(f"Error: {e}")
        return EXIT_CONFIG
    except IoFailure as e:
        print(f"Error: {e}")
        return EXIT_INTERNAL
    except HybridSimError as e:
        logger.debug("Run failed", exc_info=True)
        print(f"Error: {type(e).__name__}: {e}")
        return EXIT_INTERNAL
    except Exception as e:
        logger.exception("Unexpected failure")
        print(f"Error: internal failure: {e}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
