from hilbert.Blocks.Utils.Block import Block


class Exclusion(Block):

    @classmethod
    def isActive(cls, formulation):
        return formulation.law is None and bool(formulation.roles.unobservable)

    # a measured law may not mention unobservable variables
    def _computeRows(self, builder):
        f = self._formulation
        return [builder.addRow({col: 1}, '=', 0, 'exclude')
                for mono, col in f.qTerms() if f.excluded(mono)]

    def _computeString(self):
        names = ', '.join(self._formulation.roles.unobservable)
        return f'[EXCLUSION] {len(self._rows or [])} coefficients of q pinned to 0 (unobservable: {names}).'
