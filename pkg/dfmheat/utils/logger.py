#!/usr/bin/python

# stdlib imports
import logging
from logging import StreamHandler, FileHandler


class SimLogger(object):
    def __init__(self, logfile=None, debug=False):
        """Set up root logging for a dfmheat session.

        :param logfile:
          Session-wide log file, or None to log to the console only.
        :param debug:
          If True, log to the console (DEBUG level) instead of the file.
        """
        self._fmt = '%(levelname)s -- %(asctime)s -- %(module)s.%(funcName)s -- %(message)s'
        self._datefmt = '%Y-%m-%d %H:%M:%S'
        self._level = logging.DEBUG if debug else logging.INFO

        self._formatter = logging.Formatter(self._fmt, self._datefmt)

        # turn this on only if debug is True (or there is nowhere else to go)
        self._stream_handler = StreamHandler()
        self._stream_handler.setFormatter(self._formatter)
        self._stream_handler.setLevel(self._level)

        self._global_handler = None
        if logfile is not None:
            self._global_handler = FileHandler(logfile)
            self._global_handler.setFormatter(self._formatter)
            self._global_handler.setLevel(self._level)

        # set up logger
        logging.captureWarnings(True)
        self._logger = logging.getLogger()
        self._logger.setLevel(self._level)
        if debug or self._global_handler is None:
            self._logger.addHandler(self._stream_handler)
        else:
            self._logger.addHandler(self._global_handler)

    def getLogger(self):
        return self._logger

    def close(self):
        for handler in [self._stream_handler, self._global_handler]:
            if handler is None:
                continue
            self._logger.removeHandler(handler)
            handler.close()
        logging.captureWarnings(False)
