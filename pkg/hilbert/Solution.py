from dataclasses import dataclass, field
from typing import Dict, List, Optional

OPTIMAL = 'Optimal'
FEASIBLE = 'Feasible'
INFEASIBLE = 'Infeasible'
UNBOUNDED = 'Unbounded'
LIMIT = 'Limit'


@dataclass
class DualCertificate:
    # one dual value per constraint row, one reduced cost per column
    duals: List
    reduced_costs: Optional[List] = None
    objective: Optional[object] = None


@dataclass
class Solution:
    status: str
    values: Optional[List] = None
    objective: Optional[object] = None
    binaries: Dict[int, int] = field(default_factory=dict)
    dual: Optional[DualCertificate] = None
    # Infeasible: multipliers per row whose combination reads 0 (<=|=) c, c != 0
    farkas: Optional[Dict[int, object]] = None
    # Unbounded: improving direction over the columns
    ray: Optional[List] = None
    exact: bool = False
    stats: Dict[str, object] = field(default_factory=dict)
    message: str = ''

    @property
    def hasPoint(self):
        return self.status in (OPTIMAL, FEASIBLE) and self.values is not None

    def __repr__(self):
        obj = '' if self.objective is None else f", objective={self.objective}"
        return f"Solution({self.status}{obj}, exact={self.exact})"
