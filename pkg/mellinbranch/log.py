import logging
from typing import Optional

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(lineno)d - %(message)s"


def init_log(level: str = "WARNING", log_file: Optional[str] = None) -> logging.Logger:
    """
    Configure the root logger for command line runs.
    :param level: Name of the logging level, e.g. "INFO".
    :param log_file: Optional path of a file that receives a copy of every record.
    :return: The package logger.
    """
    numeric_level = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError("Unknown log level {}".format(level))
    logging.basicConfig(format=LOG_FORMAT, level=numeric_level)
    if log_file is not None:
        handler = logging.FileHandler(log_file)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler.setLevel(numeric_level)
        logging.getLogger().addHandler(handler)
    logger = logging.getLogger("mellinbranch")
    logger.setLevel(numeric_level)
    return logger
