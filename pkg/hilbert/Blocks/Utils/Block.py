# abstract class for a constraint block

# recall the distinction between @classmethod and normal methods:
# classmethods describe the family (its name, whether a run needs it),
# normal methods refer to the concrete block built for one formulation

class Block:

    @classmethod
    def blockName(cls):
        return cls.__name__

    # whether this family takes part in the given formulation
    @classmethod
    def isActive(cls, formulation):
        return True

    def __init__(self, formulation):
        # lazy construction: rows are only built when asked for
        self._formulation = formulation
        self._rows = None
        self._string = None

    # adds the block's columns, rows and objective terms to the builder
    # and returns the rows it created
    def _computeRows(self, builder):
        return []

    # create the rows if they do not exist, otherwise return them
    def getRows(self, builder):
        if self._rows is None:
            self._rows = [row for row in self._computeRows(builder) if row is not None]

        return self._rows

    def _computeString(self):
        return str()

    # one-line description of the block, for reports
    def getExplanation(self):
        if self._string is None:
            self._string = self._computeString()

        return self._string
