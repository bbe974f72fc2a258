from hilbert.Blocks.Utils.Block import Block
from hilbert.Polynomial import grevlexKey, monomialString
from hilbert.utils import DegreeOverflowError


class CoefficientMatching(Block):
    """One equality row per monomial of the residual
    q - alpha0 - sum alpha_i g_i - sum beta_j h_j: its coefficient, a linear
    form in the unknowns, must vanish (or equal the monomial's slack when the
    distance is penalised)."""

    @classmethod
    def isActive(cls, formulation):
        return formulation.matchingApplies()

    def _computeRows(self, builder):
        f = self._formulation
        linear, constant = f.residualExpansion()
        names = f.vars.names
        rows = []
        for mono in sorted(set(linear) | set(constant), key=grevlexKey):
            slack = f.slack.get(mono)
            if sum(mono) > f.degree and slack is None:
                raise DegreeOverflowError(
                    f"monomial {monomialString(mono, names)} exceeds certificate degree {f.degree}")
            coeffs = dict(linear.get(mono, {}))
            if slack is not None:
                coeffs[slack] = -1
            rows.append(builder.addRow(coeffs, '=', -constant.get(mono, 0), f"match:{monomialString(mono, names)}"))
        return rows

    def _computeString(self):
        return f'[COEFFICIENT MATCHING] {len(self._rows or [])} monomial rows up to degree {self._formulation.degree}.'
