import heapq
import logging
from fractions import Fraction
from itertools import count

from hilbert.Solution import FEASIBLE, INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, Solution
from hilbert.utils import Statistics

log = logging.getLogger(__name__)

NODE_LIMIT = 10**6
INTEGRALITY_TOLERANCE = 1e-6


class Node:

    def __init__(self, fixed, lower_bound, depth=0):
        self.fixed = fixed              # binary column -> 0/1
        self.lower_bound = lower_bound
        self.depth = depth
        self.solution = None

    def spec(self, relaxed):
        return relaxed.withBounds({j: (v, v) for j, v in self.fixed.items()})


class BranchAndBound:
    """Best-first branch and bound over the binary columns of a spec. Each
    node solves the LP relaxation with lp_solve and branches on the most
    fractional binary (lowest index on ties)."""

    def __init__(self, spec, lp_solve, node_limit=NODE_LIMIT, stats=None):
        self.spec = spec
        self.relaxed = spec.relaxed()
        self.lp_solve = lp_solve
        self.node_limit = node_limit
        self.stats = stats if stats is not None else Statistics()
        self.binaries = sorted(spec.binaries)
        self.global_upper_bound = None
        self.best_solution = None
        self.nodes = []
        self._ids = count()
        self.explored = 0
        self.unbounded = False

    def _push(self, node):
        bound = node.lower_bound if node.lower_bound is not None else float('-inf')
        heapq.heappush(self.nodes, (bound, next(self._ids), node))

    def _fractionality(self, v):
        if isinstance(v, Fraction):
            return min(v, 1 - v)
        f = min(v, 1 - v)
        return f if f > INTEGRALITY_TOLERANCE else 0

    def _branchVariable(self, values):
        best, choice = 0, None
        for j in self.binaries:
            f = self._fractionality(values[j])
            if f > best:
                best, choice = f, j
        return choice

    def _dominated(self, bound):
        if self.global_upper_bound is None or bound is None:
            return False
        if isinstance(bound, Fraction) and isinstance(self.global_upper_bound, Fraction):
            return bound >= self.global_upper_bound
        return float(bound) >= float(self.global_upper_bound) - 1e-9

    def solve(self):
        self._push(Node({}, None))
        while self.nodes:
            if self.explored >= self.node_limit:
                log.warning(f"branch and bound stopped after {self.explored} nodes")
                return self._result(LIMIT)
            self._evaluate_next_node()
            if self.unbounded:
                return Solution(UNBOUNDED, message='LP relaxation unbounded', stats=self.stats.asDict())
        return self._result(OPTIMAL if self.best_solution is not None else INFEASIBLE)

    def _evaluate_next_node(self):
        _, _, node = heapq.heappop(self.nodes)
        if self._dominated(node.lower_bound):
            return
        self.explored += 1
        self.stats.increment_counter('bnb_nodes')
        solution = self.lp_solve(node.spec(self.relaxed))
        if solution.status == UNBOUNDED:
            self.unbounded = True
            return
        if not solution.hasPoint or self._dominated(solution.objective):
            return
        j = self._branchVariable(solution.values)
        if j is None:
            log.debug(f"incumbent {solution.objective} at depth {node.depth}")
            node.solution = solution
            self.best_solution = solution
            self.global_upper_bound = solution.objective
            # prune nodes that won't yield better solutions
            self.nodes = [item for item in self.nodes if not self._dominated(item[2].lower_bound)]
            heapq.heapify(self.nodes)
            return
        for v in (0, 1):
            self._push(Node({**node.fixed, j: v}, solution.objective, node.depth + 1))

    def _result(self, status):
        best = self.best_solution
        if best is None:
            return Solution(status, message=f"{self.explored} nodes", stats=self.stats.asDict())
        if status == LIMIT:
            status = FEASIBLE
        binaries = {j: int(round(float(best.values[j]))) for j in self.binaries}
        values = list(best.values)
        for j, v in binaries.items():
            values[j] = Fraction(v) if best.exact else float(v)
        return Solution(status, values=values, objective=best.objective, binaries=binaries,
                        dual=best.dual, exact=best.exact, stats=self.stats.asDict(),
                        message=f"{self.explored} nodes")


def solve_milp(spec, lp_solve, node_limit=NODE_LIMIT, stats=None):
    return BranchAndBound(spec, lp_solve, node_limit, stats).solve()
