class DFMException(Exception):
    """
    Base class for errors raised by the dfmheat package.
    """

    def __init__(self, value):
        self.value = value

    def __str__(self):
        return repr(self.value)


class ConfigException(DFMException):
    """
    Invalid scenario configuration, including bad or missing units.
    """
    pass


class GridException(DFMException):
    """
    Invalid grid geometry or malformed grid/network file.
    """

    def __init__(self, value, lineno=None):
        if lineno is not None:
            value = 'line %i: %s' % (lineno, value)
        super(GridException, self).__init__(value)
        self.lineno = lineno


class SolverException(DFMException):
    """
    Linear solver failure, carrying whatever matrix diagnostics are known.
    """

    def __init__(self, value, diagnostics=None):
        super(SolverException, self).__init__(value)
        self.diagnostics = diagnostics or {}

    def __str__(self):
        if not self.diagnostics:
            return repr(self.value)
        diag = ', '.join('%s=%s' % (k, v)
                         for k, v in sorted(self.diagnostics.items()))
        return '%r (%s)' % (self.value, diag)
