from hilbert.Blocks.Utils.Block import Block
from hilbert.Sos import dsos_rows


class Dsos(Block):

    @classmethod
    def isActive(cls, formulation):
        return formulation.hyper.sos == 'dsos' and any(b.size > 1 for b in formulation.gramBlocks())

    # diagonal dominance in place of every PSD constraint
    def _computeRows(self, builder):
        rows = []
        for block in self._formulation.gramBlocks():
            if block.size > 1:
                rows.extend(dsos_rows(builder, block))
        return rows

    def _computeString(self):
        sizes = [b.size for b in self._formulation.gramBlocks() if b.size > 1]
        return f'[DSOS] diagonally dominant Gram matrices of sizes {sizes}.'
