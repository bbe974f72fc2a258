from hilbert.Blocks.Utils.Block import Block


class Complexity(Block):

    @classmethod
    def isActive(cls, formulation):
        return formulation.law is None and formulation.hyper.objective in ('weighted', 'convex')

    # w_mu >= |a_mu|: the l1 norm of q's coefficients
    def _computeRows(self, builder):
        f = self._formulation
        weight = f.weight('complexity')
        rows, slacks = [], []
        for mono, col in f.qTerms():
            if f.excluded(mono):
                continue
            w = builder.column('w', mono, lower=0)
            slacks.append(w)
            rows.append(builder.addRow({w: 1, col: -1}, '>=', 0, 'complexity'))
            rows.append(builder.addRow({w: 1, col: 1}, '>=', 0, 'complexity'))
            builder.addObjective(w, weight)
        f.parts['complexity'] = slacks
        return rows

    def _computeString(self):
        return f'[COMPLEXITY] l1 norm of q over {len(self._formulation.parts["complexity"])} coefficients.'
