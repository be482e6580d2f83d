"""
Service d'optimisation : projection exacte des consignes sur la région admissible

Le problème relaxé est réduit à deux variables (P, Q) : la puissance DC est
l'image linéaire de P par la branche du rendement, et la tension DC la plus
grande racine de l'équation du bus. La région admissible est l'intersection des
contraintes de capabilité et d'une bande de P (bornes de SoC et fenêtre de
puissance où la tension reste dans ses bornes).
"""
import logging
import math
from typing import Iterator, List, NamedTuple, Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import InfeasibleError, SolverDivergenceError
from app.core.models import (
    BatteryState,
    BessConfig,
    CapabilityCurve,
    ProjectionProblem,
    ProjectionResult,
    ProjectionStatus,
    Setpoint,
)
from app.services.battery_service import battery_service
from app.services.capability_service import capability_service

logger = logging.getLogger(__name__)

Point = Tuple[float, float]
Line = Tuple[float, float, float]  # a·P + b·Q <= c
Circle = Tuple[float, float, float]  # centre (p0, q0), rayon r

# Tolérance de filtrage des candidats (intersections calculées en flottants)
CANDIDATE_TOL = 1e-11
# Arrêt de Dykstra : déplacement du point et variation des corrections sur un balayage
DYKSTRA_TOL = 1e-13
# Nombre maximal d'itérations de point fixe pour le terme -ξ·v
MAX_XI_ITERATIONS = 50


class Region(NamedTuple):
    """Région admissible réduite dans le plan (P, Q)"""
    halfspaces: List[Line]
    disks: List[Circle]
    p_range: Tuple[float, float]
    gain: float
    c: float  # E - Σvc


class OptimizerService:
    """Service de projection des consignes (problème convexe réduit)"""

    def __init__(self):
        """Initialisation du service"""
        self.constraint_tol = settings.CONSTRAINT_TOL
        self.max_sweeps = settings.MAX_PROJECTION_SWEEPS
        self.method = settings.PROJECTION_METHOD
        self.refine_levels = settings.ORACLE_REFINE_LEVELS

    def build_problem(
        self,
        s0: Setpoint,
        curve: CapabilityCurve,
        state: BatteryState,
        config: BessConfig
    ) -> ProjectionProblem:
        """
        Assemble le problème de projection pour une consigne et l'état courant

        Les bornes de puissance DC proviennent de l'état de charge sur une période.
        """
        battery = config.battery
        return ProjectionProblem(
            s0=s0,
            curve=curve,
            vc_sum=state.vc_sum,
            e=battery_service.ocv(state.soc, battery),
            r_s=battery.r_s,
            eta=config.control.eta,
            p_dc_bounds=battery_service.soc_power_bounds(state, battery, config.control.tick, config.base),
            v_bounds=(battery.v_dc_min, battery.v_dc_max),
            xi=config.control.xi,
        )

    # --- Tension DC ---

    def v_star(self, p_dc: float, prob: ProjectionProblem) -> Tuple[float, bool]:
        """
        Plus grande tension satisfaisant la relaxation v² - c·v + r_s·p_dc <= 0 dans les bornes

        Args:
            p_dc: Puissance DC [pu]
            prob: Problème de projection

        Returns:
            (tension [pu], serrée) ; la relaxation est serrée si la tension
            est la plus grande racine de l'équation du bus

        Raises:
            InfeasibleError: Aucune tension admissible
        """
        c = prob.e - prob.vc_sum
        disc = c * c - 4.0 * prob.r_s * p_dc
        if disc < 0:
            raise InfeasibleError("discriminant", f"p_dc = {p_dc:.6g} pu")
        root = math.sqrt(disc)
        v_plus, v_minus = (c + root) / 2.0, (c - root) / 2.0
        v_min, v_max = prob.v_bounds
        v = min(v_plus, v_max)
        if v < max(v_minus, v_min):
            raise InfeasibleError("bounds", f"aucune tension dans [{v_min:.6g}, {v_max:.6g}]")
        return v, v == v_plus

    def voltage_power_window(self, prob: ProjectionProblem) -> Optional[Tuple[float, float]]:
        """
        Intervalle de puissance DC pour lequel la plus grande racine est dans les bornes de tension

        La plus grande racine décroît avec p_dc et vaut au moins c/2.

        Returns:
            (p_dc_min, p_dc_max) ou None si l'intervalle est vide
        """
        c = prob.e - prob.vc_sum
        r = prob.r_s
        v_min, v_max = prob.v_bounds
        if 2.0 * v_max < c:
            return None
        lo = v_max * (c - v_max) / r
        hi = c * c / (4.0 * r) if 2.0 * v_min <= c else v_min * (c - v_min) / r
        if lo > hi:
            return None
        return lo, hi

    # --- Région admissible ---

    def build_region(self, prob: ProjectionProblem) -> Optional[Region]:
        """
        Construit la région réduite (demi-plans, disques, bande de P)

        Returns:
            Région, ou None si la bande de P est vide
        """
        window = self.voltage_power_window(prob)
        if window is None:
            return None
        gain = prob.branch_gain
        lo = max(prob.p_dc_bounds[0], window[0]) / gain
        hi = min(prob.p_dc_bounds[1], window[1]) / gain
        if lo > hi:
            return None
        halfspaces = prob.curve.scaled_halfspaces()
        halfspaces.append((1.0, 0.0, hi))
        halfspaces.append((-1.0, 0.0, -lo))
        return Region(halfspaces, prob.curve.scaled_disks(), (lo, hi), gain, prob.e - prob.vc_sum)

    def _violation(self, region: Region, x: float, y: float) -> float:
        worst = -math.inf
        for a, b, c in region.halfspaces:
            worst = max(worst, a * x + b * y - c)
        for p0, q0, r in region.disks:
            worst = max(worst, math.hypot(x - p0, y - q0) - r)
        return worst

    def is_initial_feasible(self, prob: ProjectionProblem, tol: float = None) -> bool:
        """
        Vérifie que la consigne initiale est admissible : capabilité, bornes de SoC
        et existence d'une tension DC serrée dans les bornes
        """
        tol = self.constraint_tol if tol is None else tol
        region = self.build_region(prob)
        if region is None:
            return False
        return self._violation(region, prob.s0.p, prob.s0.q) <= tol

    # --- Projection euclidienne ---

    def _project_halfspace(self, x: float, y: float, line: Line) -> Point:
        a, b, c = line
        excess = a * x + b * y - c
        if excess <= 0:
            return x, y
        n2 = a * a + b * b
        return x - excess * a / n2, y - excess * b / n2

    def _project_disk(self, x: float, y: float, circle: Circle) -> Point:
        p0, q0, r = circle
        dx, dy = x - p0, y - q0
        d = math.hypot(dx, dy)
        if d <= r:
            return x, y
        return p0 + r * dx / d, q0 + r * dy / d

    def _line_foot(self, x: float, y: float, line: Line) -> Point:
        a, b, c = line
        excess = a * x + b * y - c
        n2 = a * a + b * b
        return x - excess * a / n2, y - excess * b / n2

    def _line_line(self, l1: Line, l2: Line) -> Iterator[Point]:
        a1, b1, c1 = l1
        a2, b2, c2 = l2
        det = a1 * b2 - a2 * b1
        if abs(det) < 1e-14:
            return
        yield (c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det

    def _line_circle(self, line: Line, circle: Circle) -> Iterator[Point]:
        a, b, c = line
        p0, q0, r = circle
        norm = math.hypot(a, b)
        dist = (a * p0 + b * q0 - c) / norm
        if abs(dist) > r:
            return
        fx, fy = p0 - dist * a / norm, q0 - dist * b / norm
        half = math.sqrt(max(r * r - dist * dist, 0.0))
        ux, uy = -b / norm, a / norm
        yield fx + half * ux, fy + half * uy
        yield fx - half * ux, fy - half * uy

    def _circle_circle(self, c1: Circle, c2: Circle) -> Iterator[Point]:
        x1, y1, r1 = c1
        x2, y2, r2 = c2
        dx, dy = x2 - x1, y2 - y1
        d = math.hypot(dx, dy)
        if d == 0.0 or d > r1 + r2 or d < abs(r1 - r2):
            return
        along = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
        half = math.sqrt(max(r1 * r1 - along * along, 0.0))
        mx, my = x1 + along * dx / d, y1 + along * dy / d
        yield mx - half * dy / d, my + half * dx / d
        yield mx + half * dy / d, my - half * dx / d

    def _candidates(self, region: Region, x0: Point) -> Iterator[Point]:
        """Points candidats : projections sur chaque frontière et intersections deux à deux"""
        lines, circles = region.halfspaces, region.disks
        for line in lines:
            yield self._line_foot(*x0, line)
        for circle in circles:
            yield self._project_disk(*x0, circle)
        for i, l1 in enumerate(lines):
            for l2 in lines[i + 1:]:
                yield from self._line_line(l1, l2)
            for circle in circles:
                yield from self._line_circle(l1, circle)
        for i, c1 in enumerate(circles):
            for c2 in circles[i + 1:]:
                yield from self._circle_circle(c1, c2)

    def _project_active_set(self, region: Region, x0: Point) -> Optional[Point]:
        """
        Projection exacte en dimension 2 : au plus deux contraintes sont actives
        à l'optimum, qui figure donc parmi les candidats admissibles
        """
        if self._violation(region, *x0) <= 0:
            return x0
        best, best_dist = None, math.inf
        for point in self._candidates(region, x0):
            if self._violation(region, *point) > CANDIDATE_TOL:
                continue
            dist = (point[0] - x0[0]) ** 2 + (point[1] - x0[1]) ** 2
            if dist < best_dist:
                best, best_dist = point, dist
        return best

    def _project_dykstra(self, region: Region, x0: Point) -> Optional[Point]:
        """
        Projections cycliques avec correction (Dykstra)

        Raises:
            SolverDivergenceError: Nombre maximal de balayages dépassé
        """
        projections = [(self._project_halfspace, line) for line in region.halfspaces]
        projections += [(self._project_disk, circle) for circle in region.disks]
        increments = [(0.0, 0.0)] * len(projections)
        x, y = x0
        for sweep in range(1, self.max_sweeps + 1):
            start = (x, y)
            drift = 0.0
            for i, (project, constraint) in enumerate(projections):
                ix, iy = increments[i]
                ux, uy = x + ix, y + iy
                x, y = project(ux, uy, constraint)
                increments[i] = (ux - x, uy - y)
                drift = max(drift, abs(ux - x - ix), abs(uy - y - iy))
            # Le point peut rester immobile pendant que les corrections évoluent encore
            moved = math.hypot(x - start[0], y - start[1])
            if moved <= DYKSTRA_TOL and drift <= DYKSTRA_TOL and self._violation(region, x, y) <= CANDIDATE_TOL:
                logger.debug(f"Dykstra convergé en {sweep} balayages")
                return x, y
        raise SolverDivergenceError(
            f"projection non convergée après {self.max_sweeps} balayages"
        )

    def _project(self, region: Region, x0: Point, method: str) -> Optional[Point]:
        if method == "dykstra":
            return self._project_dykstra(region, x0)
        if method == "active_set":
            return self._project_active_set(region, x0)
        raise ValueError(f"méthode de projection inconnue: {method!r}")

    def _absorb_xi(self, region: Region, prob: ProjectionProblem, x: Point, method: str) -> Point:
        """
        Prise en compte du terme -ξ·v : point fixe x = Proj(x0 + ξ/2·∇v(x))
        """
        x0 = (prob.s0.p, prob.s0.q)
        for _ in range(MAX_XI_ITERATIONS):
            disc = region.c ** 2 - 4.0 * prob.r_s * region.gain * x[0]
            if disc <= 0:
                break
            slope = -region.gain * prob.r_s / math.sqrt(disc)
            shifted = (x0[0] + 0.5 * prob.xi * slope, x0[1])
            nxt = self._project(region, shifted, method)
            if nxt is None:
                break
            moved = math.hypot(nxt[0] - x[0], nxt[1] - x[1])
            x = nxt
            if moved <= 1e-15:
                break
        return x

    def _infeasible(self) -> ProjectionResult:
        return ProjectionResult(
            s=Setpoint(p=0.0, q=0.0),
            v_dc=math.nan,
            p_dc=0.0,
            objective=math.nan,
            tight=False,
            status=ProjectionStatus.INFEASIBLE,
        )

    def _result(self, prob: ProjectionProblem, region: Region, x: Point, status: ProjectionStatus) -> ProjectionResult:
        p_dc = region.gain * x[0]
        v = battery_service.upper_root(region.c, prob.r_s, p_dc)
        residual = v * v - region.c * v + prob.r_s * p_dc
        s = prob.s0 if status is ProjectionStatus.PASSTHROUGH else Setpoint(p=x[0], q=x[1])
        objective = (x[0] - prob.s0.p) ** 2 + (x[1] - prob.s0.q) ** 2 - prob.xi * v
        return ProjectionResult(
            s=s,
            v_dc=v,
            p_dc=p_dc,
            objective=objective,
            tight=abs(residual) <= self.constraint_tol,
            status=status,
        )

    def solve(self, prob: ProjectionProblem, method: str = None) -> ProjectionResult:
        """
        Projette la consigne initiale sur la région admissible

        Minimise (P-P0)² + (Q-Q0)² - ξ·v sur la région réduite. Une consigne
        initiale admissible est renvoyée telle quelle (statut passthrough).

        Args:
            prob: Problème de projection
            method: "active_set" (défaut) ou "dykstra"

        Returns:
            Résultat de la projection (statut infeasible si la région est vide)
        """
        method = method or self.method
        region = self.build_region(prob)
        if region is None:
            logger.debug("Région admissible vide (bande de P vide)")
            return self._infeasible()

        x0 = (prob.s0.p, prob.s0.q)
        if self._violation(region, *x0) <= self.constraint_tol:
            return self._result(prob, region, x0, ProjectionStatus.PASSTHROUGH)

        x = self._project(region, x0, method)
        if x is None:
            logger.debug("Région admissible vide (aucun candidat)")
            return self._infeasible()
        x = self._absorb_xi(region, prob, x, method)
        return self._result(prob, region, x, ProjectionStatus.FEASIBLE)

    # --- Oracle par balayage ---

    def _scan(
        self,
        prob: ProjectionProblem,
        lo: float,
        hi: float,
        step: float
    ) -> Optional[Tuple[float, float, float, float]]:
        """
        Balaye P sur une grille de pas `step` ; pour chaque colonne, l'intervalle
        admissible en Q est calculé exactement et Q0 y est ramené

        Returns:
            (P, Q, v, distance²) du meilleur point ou None
        """
        first = math.ceil(lo / step - 1e-9)
        last = math.floor(hi / step + 1e-9)
        if last < first:
            return None
        p = np.arange(first, last + 1, dtype=float) * step
        q_lo = np.full_like(p, -np.inf)
        q_hi = np.full_like(p, np.inf)
        ok = np.ones_like(p, dtype=bool)

        for a, b, c in prob.curve.scaled_halfspaces():
            if b > 0:
                q_hi = np.minimum(q_hi, (c - a * p) / b)
            elif b < 0:
                q_lo = np.maximum(q_lo, (c - a * p) / b)
            else:
                ok &= a * p <= c
        for p0, q0, r in prob.curve.scaled_disks():
            rem = r * r - (p - p0) ** 2
            ok &= rem >= 0
            half = np.sqrt(np.maximum(rem, 0.0))
            q_lo = np.maximum(q_lo, q0 - half)
            q_hi = np.minimum(q_hi, q0 + half)
        ok &= q_lo <= q_hi

        # Bornes de SoC puis équation exacte du bus DC
        p_dc = prob.branch_gain * p
        ok &= (p_dc >= prob.p_dc_bounds[0]) & (p_dc <= prob.p_dc_bounds[1])
        v = battery_service.upper_root(prob.e - prob.vc_sum, prob.r_s, p_dc)
        v_min, v_max = prob.v_bounds
        with np.errstate(invalid="ignore"):
            ok &= np.isfinite(v) & (v >= v_min) & (v <= v_max)
        if not ok.any():
            return None

        q = np.clip(prob.s0.q, q_lo, q_hi)
        dist = np.where(ok, (p - prob.s0.p) ** 2 + (q - prob.s0.q) ** 2, np.inf)
        i = int(np.argmin(dist))
        return float(p[i]), float(q[i]), float(v[i]), float(dist[i])

    def oracle(self, prob: ProjectionProblem, grid_step: float) -> ProjectionResult:
        """
        Référence par force brute du problème d'origine (sans relaxation)

        Args:
            prob: Problème de projection
            grid_step: Pas de la grille en P [pu]

        Returns:
            Meilleur point de la grille (statut infeasible si aucun point n'est admissible)
        """
        if grid_step <= 0:
            raise ValueError("le pas de grille doit être strictement positif")
        p_min, p_max, _, _ = capability_service.bounding_box(prob.curve)
        best = self._scan(prob, p_min, p_max, grid_step)
        if best is None:
            return self._infeasible()

        # L'objectif réduit est convexe en P : le minimum est à moins d'un pas du meilleur point
        step = grid_step
        for _ in range(self.refine_levels):
            centre = best[0]
            step /= 20.0
            refined = self._scan(prob, centre - 20.0 * step, centre + 20.0 * step, step)
            if refined is not None and refined[3] <= best[3]:
                best = refined

        p, q, v, dist = best
        return ProjectionResult(
            s=Setpoint(p=p, q=q),
            v_dc=v,
            p_dc=prob.branch_gain * p,
            objective=dist,
            tight=True,
            status=ProjectionStatus.FEASIBLE,
        )


# Instance du service
optimizer_service = OptimizerService()
