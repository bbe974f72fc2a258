from hilbert.Blocks.Utils.Block import Block
from hilbert.Encoding import PsdBlock
from hilbert.Polynomial import grevlexKey
from hilbert.utils import FormulationError


class Distance(Block):
    """Relaxes or restricts the coefficient matching.

    l1 / l2: a free slack e_mu per residual monomial enters its matching row,
    with u_mu >= |e_mu| (l1) or u_mu >= e_mu^2 through a 2x2 PSD block
    [[u, e], [e, 1]] (l2); the u's are the distance term of the objective.

    subset: one binary per axiom; big-M rows force every multiplier
    coefficient of a deselected axiom to zero, at most tau axioms are kept,
    and each `exclusive` group keeps all but one of its members at most.
    A tau given together with l1 / l2 selects axioms the same way."""

    @classmethod
    def isActive(cls, formulation):
        hyper = formulation.hyper
        return hyper.distance != 'hard-zero' or bool(hyper.exclusive)

    @staticmethod
    def selects(hyper):
        if hyper.distance == 'subset' or hyper.exclusive:
            return True
        return hyper.distance in ('l1', 'l2') and hyper.tau is not None

    def _slackRows(self, builder):
        f = self._formulation
        linear, constant = f.residualExpansion()
        weight = f.weight('distance')
        rows, slacks = [], []
        for mono in sorted(set(linear) | set(constant), key=grevlexKey):
            e = builder.column('e', mono)
            u = builder.column('u', mono, lower=0)
            f.slack[mono] = e
            slacks.append(u)
            if f.hyper.distance == 'l1':
                rows.append(builder.addRow({u: 1, e: -1}, '>=', 0, 'l1'))
                rows.append(builder.addRow({u: 1, e: 1}, '>=', 0, 'l1'))
            else:
                one = builder.column('one', mono)
                rows.append(builder.addRow({one: 1}, '=', 1, 'l2'))
                builder.addPsd(PsdBlock(f"epigraph:{len(slacks)}", 2, (((0, 0), u), ((0, 1), e), ((1, 1), one))))
            builder.addObjective(u, weight)
        f.parts['distance'] = slacks
        return rows

    def _selectionRows(self, builder):
        f = self._formulation
        hyper = f.hyper
        labels = f.theory.labels()
        for group in hyper.exclusive:
            for label in group:
                if label not in labels:
                    raise FormulationError(f"exclusive group names unknown axiom `{label}`")
        rows = []
        M = hyper.big_M
        for label in labels:
            z = builder.column('z', label, binary=True)
            f.selection[label] = z
            for col in f.multiplierColumns(label):
                rows.append(builder.addRow({col: 1, z: -M}, '<=', 0, f"select:{label}"))
                rows.append(builder.addRow({col: -1, z: -M}, '<=', 0, f"select:{label}"))
        if hyper.distance == 'subset' or hyper.tau is not None:
            tau = len(labels) if hyper.tau is None else hyper.tau
            if tau < 0:
                raise FormulationError("tau must be >= 0")
            rows.append(builder.addRow({f.selection[l]: 1 for l in labels}, '<=', tau, 'budget'))
        for group in hyper.exclusive:
            rows.append(builder.addRow({f.selection[l]: 1 for l in group}, '<=', len(group) - 1, 'exclusive'))
        return rows

    def _computeRows(self, builder):
        f = self._formulation
        rows = []
        if f.hyper.distance in ('l1', 'l2') and f.matchingApplies():
            rows += self._slackRows(builder)
        if self.selects(f.hyper):
            rows += self._selectionRows(builder)
        return rows

    def _computeString(self):
        f = self._formulation
        hyper = f.hyper
        out = []
        if hyper.distance in ('l1', 'l2'):
            out.append(f'[DISTANCE] {hyper.distance} residual over {len(f.parts["distance"])} monomials.')
        if f.selection:
            tau = len(f.selection) if hyper.tau is None else hyper.tau
            out.append(f'[DISTANCE] subset selection over {len(f.selection)} axioms, budget {tau}.')
        return ' '.join(out) or '[DISTANCE] exact matching.'
