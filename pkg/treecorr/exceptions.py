""" Custom exceptions shared by every treecorr component """


class TreecorrError(Exception):
    """The base exception for errors raised by the treecorr components.

    ``code`` is the stable machine readable name reported by the command line and
    ``exit_code`` the process status it maps to (2 for bad input, 1 when the error is
    itself evidence against an ordering).
    """

    code = "treecorr_error"
    exit_code = 2

    def __init__(self, message="", detail=None):
        super().__init__(message)
        self.detail = detail
