from math import prod

from hilbert.Blocks.Utils.Block import Block


class DataFit(Block):
    """t_i >= |q(x_i)| for every data row, linear in the coefficients of q,
    plus the optional aggregate cap sum t_i <= m * epsilon."""

    @classmethod
    def isActive(cls, formulation):
        f = formulation
        if f.law is not None or f.dataset is None or f.dataset.m == 0:
            return False
        return f.hyper.objective != 'feasibility' or f.hyper.data_cap

    def _computeRows(self, builder):
        f = self._formulation
        terms = f.qTerms()
        weight = f.weight('misfit')
        rows, slacks = [], []
        for i, point in enumerate(f.dataset.exact):
            value = {}
            for mono, col in terms:
                v = prod(x ** e for x, e in zip(point, mono) if e)
                if v:
                    value[col] = v
            t = builder.column('t', i, lower=0)
            slacks.append(t)
            rows.append(builder.addRow({t: 1, **{c: -v for c, v in value.items()}}, '>=', 0, f"fit{i}"))
            rows.append(builder.addRow({t: 1, **value}, '>=', 0, f"fit{i}"))
            builder.addObjective(t, weight)
        f.parts['misfit'] = slacks
        if f.hyper.data_cap:
            rows.append(builder.addRow({t: 1 for t in slacks}, '<=', f.dataset.m * f.hyper.epsilon, 'datacap'))
        return rows

    def _computeString(self):
        f = self._formulation
        cap = f' with sum capped at {f.dataset.m} * {f.hyper.epsilon}' if f.hyper.data_cap else ''
        return f'[DATA FIT] |q(x_i)| linearised over {f.dataset.m} rows{cap}.'
