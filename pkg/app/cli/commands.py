"""
Commandes de la ligne de commande
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app.cli.dependencies import get_config, get_curves, get_droop, get_problem, get_state
from app.core.config import settings
from app.core.exceptions import BessError, ConfigError, InfeasibleError
from app.core.models import ProjectionStatus, Setpoint, SimulationMethod
from app.core.schemas import ProjectOutput
from app.services.battery_service import battery_service
from app.services.bench_service import bench_service
from app.services.capability_service import capability_service
from app.services.discretizer_service import discretizer_service
from app.services.optimizer_service import optimizer_service
from app.services.simulation_service import simulation_service
from app.storage import files

logger = logging.getLogger(__name__)

# Codes de sortie
EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_CONFIG = 2


def cmd_gen_trace(args: argparse.Namespace) -> int:
    """Génère une trace synthétique de fréquence et de tension"""
    trace = simulation_service.gen_trace(args.seed, args.duration_s, dt=args.dt)
    files.write_trace(trace, args.out)
    return EXIT_OK


def cmd_discretize(args: argparse.Namespace) -> int:
    """Construit la table des rayons maximaux pour un contexte donné"""
    config = get_config(args.config)
    curves = get_curves(args.curves, config, args.config)
    state = get_state(config, args.soc, args.vdc)
    curve = capability_service.select_curve(curves, args.vac, state.v_dc)
    bounds = battery_service.soc_power_bounds(state, config.battery, config.control.tick, config.base)
    ctx = discretizer_service.static_context(curve, bounds, config.control.eta, args.vac, state.v_dc, state.soc)
    table = discretizer_service.build_table(ctx, args.resolution)
    discretizer_service.write_table(table, args.out)
    return EXIT_OK


def cmd_project(args: argparse.Namespace) -> int:
    """Projette une consigne et imprime p,q,tight,status"""
    config = get_config(args.config)
    curves = get_curves(args.curves, config, args.config)
    state = get_state(config, args.soc, args.vdc)
    prob = get_problem(config, curves, Setpoint(p=args.p0, q=args.q0), args.vac, state)

    if args.method == SimulationMethod.FAST.value:
        ctx = discretizer_service.static_context(
            prob.curve, prob.p_dc_bounds, prob.eta, args.vac, state.v_dc, state.soc
        )
        table = discretizer_service.build_table(ctx, args.resolution)
        s = discretizer_service.fast_project(prob.s0, table)
        v = battery_service.upper_root(prob.e - prob.vc_sum, prob.r_s, prob.branch_gain * s.p)
        tight = prob.v_bounds[0] <= v <= prob.v_bounds[1]
        status = ProjectionStatus.PASSTHROUGH if s is prob.s0 else ProjectionStatus.FEASIBLE
        print(ProjectOutput.from_setpoint(s, tight, status.value).to_csv_line())
        return EXIT_OK

    result = optimizer_service.solve(prob)
    print(ProjectOutput.from_result(result).to_csv_line())
    if result.status is ProjectionStatus.INFEASIBLE:
        logger.warning("Aucune consigne admissible")
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    """Simule la boucle de contrôle sur une trace et écrit le journal et les métriques"""
    config = get_config(args.config)
    curves = get_curves(args.curves, config, args.config)
    config = get_droop(config, args.alpha, args.df_max, args.dv_max)
    trace = files.read_trace(args.trace)
    log, metrics = simulation_service.simulate(trace, args.method, config, curves, args.resolution)
    if args.log:
        files.write_tick_log(log, args.log)
    if args.metrics:
        files.write_metrics(metrics, args.metrics)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    """Mesure les latences de l'optimiseur et de la projection rapide"""
    config = get_config(args.config)
    curves = get_curves(args.curves, config, args.config)
    trace = files.read_trace(args.trace)
    report = bench_service.bench(trace, config, curves, args.resolution)
    bench_service.write_report(report, Path(args.out))
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    """Recalcule les métriques d'énergie à partir d'un journal"""
    config = get_config(args.config)
    frame = files.read_tick_log(args.log)
    tick = simulation_service.infer_tick(frame, default=config.control.tick)
    metrics = simulation_service.metrics_from_log(frame, config.base, tick)
    if args.out:
        files.write_metrics(metrics, args.out)
    print(f"{metrics.tde!r},{metrics.tce!r},{metrics.tse!r}")
    return EXIT_OK


def _add_plant_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="fichier de configuration (défaut ./bess.conf)")
    parser.add_argument("--curves", help="fichier de courbes de capabilité (défaut : curves.path)")


def build_parser() -> argparse.ArgumentParser:
    """Construit l'analyseur des arguments et ses sous-commandes"""
    parser = argparse.ArgumentParser(
        prog="bess",
        description=f"{settings.APP_NAME} v{settings.APP_VERSION}",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-trace", help="génère une trace synthétique")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--duration-s", type=float, default=3600.0)
    p.add_argument("--dt", type=float, default=0.1, help="pas d'échantillonnage [s]")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_gen_trace)

    p = sub.add_parser("discretize", help="construit une table de rayons")
    _add_plant_options(p)
    p.add_argument("--vac", type=float, default=1.0)
    p.add_argument("--vdc", type=float, default=None)
    p.add_argument("--soc", type=float, default=None)
    p.add_argument("--resolution", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_discretize)

    p = sub.add_parser("project", help="projette une consigne")
    _add_plant_options(p)
    p.add_argument("--p0", type=float, required=True)
    p.add_argument("--q0", type=float, required=True)
    p.add_argument("--vac", type=float, default=1.0)
    p.add_argument("--vdc", type=float, default=None)
    p.add_argument("--soc", type=float, default=None)
    p.add_argument("--method", choices=["opt", "fast"], default="opt")
    p.add_argument("--resolution", type=float, default=None)
    p.set_defaults(handler=cmd_project)

    p = sub.add_parser("simulate", help="simule la boucle de contrôle")
    _add_plant_options(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--method", choices=[m.value for m in SimulationMethod], default="opt")
    p.add_argument("--log")
    p.add_argument("--metrics")
    p.add_argument("--alpha", type=float, default=None, help="statisme en fréquence [MW/Hz]")
    p.add_argument("--df-max", type=float, default=None, help="écart de fréquence maximal observé [Hz]")
    p.add_argument("--dv-max", type=float, default=None, help="écart de tension maximal observé [V]")
    p.add_argument("--resolution", type=float, default=None)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("bench", help="banc de latence")
    _add_plant_options(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True, help="dossier de sortie")
    p.add_argument("--resolution", type=float, default=None)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("metrics", help="recalcule les métriques d'un journal")
    p.add_argument("--log", required=True)
    p.add_argument("--config", help="fichier de configuration (défaut ./bess.conf)")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_metrics)

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """
    Exécute une commande

    Args:
        argv: Arguments (sys.argv[1:] par défaut)

    Returns:
        Code de sortie : 0 succès, 1 infaisable, 2 erreur de configuration ou d'analyse
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"erreur de configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as e:
        print(f"infaisable: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BessError as e:
        logger.exception("Erreur pendant l'exécution de la commande")
        print(f"erreur: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as e:
        print(f"erreur de paramètre: {e}", file=sys.stderr)
        return EXIT_CONFIG
