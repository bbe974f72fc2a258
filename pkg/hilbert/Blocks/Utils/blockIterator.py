# This file contains the tools to iterate through the implemented constraint blocks.

from hilbert.Blocks.Distance import Distance
from hilbert.Blocks.CoefficientMatching import CoefficientMatching
from hilbert.Blocks.Normalization import Normalization
from hilbert.Blocks.Exclusion import Exclusion
from hilbert.Blocks.DataFit import DataFit
from hilbert.Blocks.Complexity import Complexity
from hilbert.Blocks.Dsos import Dsos

# the order fixes the column layout: Distance allocates the residual slacks
# that CoefficientMatching puts into its rows
block_list = (Distance, CoefficientMatching, Normalization, Exclusion, DataFit, Complexity, Dsos)

def blockNames():
    return [b.blockName() for b in block_list]

# General loop function.
# blocks_to_use --> names of the blocks allowed (None: all of them)
def blocks(formulation, blocks_to_use=None):
    for b in block_list:
        if blocks_to_use is not None and b.blockName() not in blocks_to_use:
            continue
        if b.isActive(formulation):
            yield b
