import logging
import os
import time
from datetime import datetime

import pytz


def setup_logger(output_folder, timezone="UTC", name="simplicial_log"):
    # Create a logger
    logger = logging.getLogger(name)
    logger.setLevel(logging.INFO)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    # Create a file handler
    local_tz = pytz.timezone(timezone)
    os.makedirs(output_folder, exist_ok=True)
    log_filename = f"{output_folder}/log_{datetime.now(local_tz).strftime('%Y%m%d-%H%M%S')}.log"
    file_handler = logging.FileHandler(log_filename)
    file_handler.setLevel(logging.INFO)

    # Create a console handler
    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)

    # Create a formatting for the logs
    class LocalTimeFormatter(logging.Formatter):
        def converter(self, timestamp):
            return datetime.fromtimestamp(timestamp, local_tz)

        def formatTime(self, record, datefmt=None):
            dt = self.converter(record.created)
            if datefmt:
                return dt.strftime(datefmt)
            return dt.strftime("%Y-%m-%d %H:%M:%S")

    formatter = LocalTimeFormatter('%(asctime)s - %(levelname)s - %(message)s')
    file_handler.setFormatter(formatter)
    console_handler.setFormatter(formatter)

    # Add the handlers to the logger
    logger.addHandler(file_handler)
    logger.addHandler(console_handler)
    logger.propagate = False

    return logger


def timestamp(timezone="UTC"):
    return datetime.now(pytz.timezone(timezone)).isoformat(timespec="seconds")


class Timer:
    def __init__(self):
        self.reset()

    def reset(self):
        self.start_time = time.perf_counter()

    def get_elapsed_time(self):
        return time.perf_counter() - self.start_time
