"""
Pipeline orchestrator.
Runs the eval, counterterms, verify and oracle commands of one configuration.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from phi4flow.config import RunConfig
from phi4flow.context import RunContext
from phi4flow.errors import ConfigError, OutOfScopeError
from phi4flow.interfaces import SuiteStatus, SweepReport
from phi4flow.models import CASIndex
from phi4flow.modules.flow_solver import (
    ClosedFormEvaluator,
    RotationContext,
    get_evaluator,
    get_solver,
    rsy_channels,
    tadpole_zone_quadrature,
)
from phi4flow.modules.memo_grid import two_loop_two_point
from phi4flow.modules.verification import get_suite
from phi4flow.reporting import cas_unit, format_summary, write_suite_report, write_table
from phi4flow.utils import PointRunner

logger = logging.getLogger(__name__)


class FlowPipeline:
    """
    Orchestrates phi4flow commands for one RunConfig.
    """
    def __init__(self, config: RunConfig):
        self.config = config
        self.ctx = RunContext(config)
        self.runner = PointRunner(config.threads)

    @property
    def index(self) -> CASIndex:
        return CASIndex(l=self.config.task.loop, n=self.config.task.legs)

    def _rotation_context(self) -> Optional[RotationContext]:
        task = self.config.task
        if task.rotation is None:
            return None
        return RotationContext(rotation=task.rotation.build(), counterterms=task.rotated_counterterms)

    def _momentum_rows(self) -> List[np.ndarray]:
        n = self.config.task.legs
        rows = [np.asarray(m, dtype=float) for m in self.config.task.momenta]
        for i, m in enumerate(rows):
            if m.shape != (n, 4):
                raise ConfigError(f"task.momenta[{i}] has shape {m.shape}, expected ({n}, 4)")
        return rows

    # --- eval ---------------------------------------------------------------------------------

    def run_eval(self) -> pd.DataFrame:
        """One row per momentum configuration: inputs, value and quadrature error."""
        cfg = self.config
        task = cfg.task
        params = cfg.lattice_params()
        idx = self.index
        logger.info(f"[Pipeline] eval {idx} at a0={params.a0:g}, a={params.a:g}, method={task.method}")
        if not idx.in_scope:
            raise OutOfScopeError(f"{idx} is outside the implemented index set")
        ctx = self._rotation_context()
        two_loop = (idx.l, idx.n) == (2, 2)
        rows = self._momentum_rows()
        if not two_loop:
            # counterterms are a setup phase shared by every row
            evaluator = get_evaluator(task.method, params.a0, params.m, params.f, cfg.quadrature, ctx)
            for l in range(1, idx.l + 1):
                if idx.n % 2 == 0:
                    evaluator.counterterms(l)

        def point(row):
            momenta = rows[int(row["row"])]
            if two_loop:
                result = two_loop_two_point(momenta[0], params, cfg.quadrature, task.two_loop)
                return result.value, result.error, result.defect, result.interpolation_error
            evaluator = get_evaluator(task.method, params.a0, params.m, params.f, cfg.quadrature, ctx)
            result = evaluator.evaluate(idx.l, idx.n, momenta, params, w=task.multi_index)
            return float(result.value), float(result.error)

        sweep = pd.DataFrame({"row": range(len(rows))})
        results = self.runner.apply(sweep, point)
        table = sweep.assign(l=idx.l, n=idx.n, a0=params.a0, a=params.a, method=task.method)
        table["momenta"] = [" ".join(f"{x:.17g}" for x in m.ravel()) for m in rows]
        table["value"] = [r[0] for r in results]
        table["error"] = [r[1] for r in results]
        if two_loop:
            table["defect"] = [r[2] for r in results]
            table["interpolation_error"] = [r[3] for r in results]
        write_table(table, self.ctx.eval_csv)
        return table

    # --- counterterms ---------------------------------------------------------------------------

    def run_counterterms(self) -> pd.DataFrame:
        """Rows (a0, l, d_l, b_l, c_l, error); c_2 is NaN."""
        cfg = self.config
        a0_values = cfg.regulator.a0_list or [cfg.regulator.a0]
        rows = []
        for a0 in a0_values:
            solver = get_solver(a0, cfg.physics.m, cfg.physics.f, cfg.quadrature, self._rotation_context())
            if 2 in cfg.task.loops:
                solver.configure_two_loop(cfg.task.two_loop)
            for l in sorted(set(cfg.task.loops)):
                entry = solver.counterterms(l)
                rows.append({
                    "a0": a0, "l": l, "d": entry.d, "b": entry.b,
                    "c": math.nan if entry.c is None else entry.c, "error": entry.error,
                })
                logger.info(f"[Pipeline] a0={a0:g} l={l}: d={entry.d:.10g} b={entry.b:.3g} c={rows[-1]['c']:.10g}")
        table = pd.DataFrame(rows, columns=["a0", "l", "d", "b", "c", "error"])
        write_table(table, self.ctx.counterterms_csv)
        return table

    # --- verify ------------------------------------------------------------------------------------

    def run_verify(self, suites: Optional[Sequence[str]] = None,
                   ln: Optional[Tuple[int, int]] = None) -> Tuple[List[SweepReport], SuiteStatus]:
        names = list(suites) if suites else list(self.config.task.suites)
        reports: List[SweepReport] = []
        for name in names:
            logger.info(f"[Pipeline] Running suite '{name}'")
            reports.extend(get_suite(name).run(self.config, self.runner, ln))
        status = write_suite_report(self.ctx, reports, self.config.output.emit_gnuplot)
        logger.info("\n" + format_summary(reports))
        return reports, status

    # --- oracle ------------------------------------------------------------------------------------

    def run_oracle(self) -> pd.DataFrame:
        """Analytic reference values for the configured index, momenta and regulator."""
        cfg = self.config
        params = cfg.lattice_params()
        idx = self.index
        closed = ClosedFormEvaluator(params.a0, params.m, params.f, cfg.quadrature, self._rotation_context())
        rows = []
        unit = cas_unit(idx.n)

        def add(row, quantity, value, row_unit=unit):
            rows.append({"row": row, "quantity": quantity, "unit": row_unit, "value": float(value)})

        for i, momenta in enumerate(self._momentum_rows()):
            if (idx.l, idx.n) == (0, 6):
                add(i, f"tree_six_point_sum_{len(rsy_channels(6, 3))}_channels",
                    closed.evaluate(0, 6, momenta, params).value)
            elif (idx.l, idx.n) == (1, 2):
                add(i, "tadpole_heat_kernel", closed.evaluate(1, 2, momenta, params).value)
                add(i, "tadpole_zone_quadrature",
                    -0.5 * params.f * tadpole_zone_quadrature(params.a0, params.m, params.a, cfg.quadrature).value)
            elif (idx.l, idx.n) == (1, 4):
                add(i, "one_loop_four_point_bubbles", closed.evaluate(1, 4, momenta, params).value)
            elif (idx.l, idx.n) in ((0, 2), (0, 4)):
                add(i, "tree_constant", closed.evaluate(idx.l, idx.n, momenta, params).value)
            else:
                raise OutOfScopeError(f"No oracle for {idx}")
        if idx.l >= 1:
            # row -1 holds regulator-level constants
            add(-1, "d_1_heat_kernel", closed.counterterms(1).d, "mass^2")
            add(-1, "d_1_zone_quadrature",
                -0.25 * params.f * tadpole_zone_quadrature(params.a0, params.m, params.a0, cfg.quadrature).value,
                "mass^2")
            add(-1, "c_1_bubble", closed.counterterms(1).c, "1")
        table = pd.DataFrame(rows, columns=["row", "quantity", "unit", "value"])
        write_table(table, self.ctx.oracle_csv, units={"value": "see unit"})
        return table
