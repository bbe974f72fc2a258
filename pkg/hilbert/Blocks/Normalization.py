from hilbert.Blocks.Utils.Block import Block
from hilbert.Polynomial import parse_polynomial
from hilbert.utils import FormulationError, HilbertError


class Normalization(Block):
    """Rules out q = 0. `dependent`: the coefficients of the monomials of q
    containing the dependent variable sum to the normalisation value.
    `selected`: the same over a listed set of monomials. `disjunction`:
    the dependent sum plus a big-M disjunction S <= -rho or S >= rho over
    the monomials free of the dependent variable."""

    @classmethod
    def isActive(cls, formulation):
        return formulation.law is None

    def _dependentColumns(self):
        f = self._formulation
        dependent = f.roles.dependent
        if dependent is None:
            raise FormulationError("normalization needs a dependent variable")
        i = f.vars.index(dependent)
        with_dep = [col for mono, col in f.qTerms() if mono[i] >= 1]
        without = [col for mono, col in f.qTerms() if mono[i] == 0 and not f.excluded(mono)]
        if not with_dep:
            raise FormulationError(f"no candidate monomial of q contains `{dependent}` under the degree caps")
        return with_dep, without

    def _selectedColumns(self):
        f = self._formulation
        columns = dict(f.qTerms())
        out = []
        for text in f.hyper.normalization_monomials:
            try:
                p = parse_polynomial(text, f.vars)
            except HilbertError as e:
                raise FormulationError(f"normalization monomial `{text}`: {e}") from None
            if len(p) != 1:
                raise FormulationError(f"normalization entry `{text}` is not a monomial")
            mono = p.monomials()[0]
            if mono not in columns:
                raise FormulationError(f"normalization monomial `{text}` is not a candidate monomial of q")
            out.append(columns[mono])
        if not out:
            raise FormulationError("normalization = selected needs normalization_monomials")
        return out

    def _computeRows(self, builder):
        f = self._formulation
        hyper = f.hyper
        value = hyper.normalization_value
        rows = []
        if hyper.normalization == 'selected':
            cols = self._selectedColumns()
            rows.append(builder.addRow({c: 1 for c in cols}, '=', value, 'normalize'))
            return rows
        with_dep, without = self._dependentColumns()
        rows.append(builder.addRow({c: 1 for c in with_dep}, '=', value, 'normalize'))
        if hyper.normalization == 'disjunction' and without:
            M, rho = hyper.big_M, hyper.rho
            b = builder.column('b', 'disjunction', binary=True)
            f.disjunction = b
            # b = 1: S >= rho, b = 0: S <= -rho
            rows.append(builder.addRow({**{c: 1 for c in without}, b: -M}, '>=', rho - M, 'disjunction'))
            rows.append(builder.addRow({**{c: 1 for c in without}, b: -M}, '<=', -rho, 'disjunction'))
        return rows

    def _computeString(self):
        hyper = self._formulation.hyper
        return f'[NORMALIZATION] {hyper.normalization} mode, value {hyper.normalization_value}.'
