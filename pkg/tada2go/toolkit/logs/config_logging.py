import datetime
import logging
import os
import threading

import pandas as pd
from dotenv import load_dotenv

load_dotenv()

LOG_DIR = os.getenv("TADA_LOG_DIR", "logs")
LOG_FILE_NAME = "tada2go.log"


class RunRecordHandler(logging.Handler):
    """
    A logging handler that queues log records of one experiment run and writes them to a CSV file on demand.

    Attributes:
        log_queue (list): Queue of log records not yet written.
        queue_lock (threading.Lock): Guards the queue against concurrent stage workers.
    """

    COLUMNS = ["timestamp", "log_level", "source", "log_message"]

    def __init__(self):
        """
        Initializes the RunRecordHandler with an empty queue.
        """
        super().__init__()
        self.log_queue = []
        self.queue_lock = threading.Lock()

    def emit(self, record):
        """
        Queues a record until the run flushes it.

        Args:
            record (logging.LogRecord): Record emitted anywhere in the toolkit or the harness.
        """
        with self.queue_lock:
            self.log_queue.append(record)

    def write_queued_logs(self, path: str) -> int:
        """
        Appends the queued log records to a CSV file and clears the queue.

        Args:
            path (str): Destination CSV file. Created with a header if it does not exist.

        Returns:
            int: Number of records written.
        """
        with self.queue_lock:
            records = list(self.log_queue)
            self.log_queue = []

        if not records:
            return 0

        rows = [{
            "timestamp": datetime.datetime.fromtimestamp(record.created).strftime('%Y-%m-%d %H:%M:%S'),
            "log_level": record.levelname,
            "source": f"{record.filename}:{record.lineno}",
            "log_message": record.getMessage(),
        } for record in records]

        try:
            frame = pd.DataFrame(rows, columns=self.COLUMNS)
            frame.to_csv(path, mode='a', header=not os.path.exists(path), index=False)
        except Exception as e:
            print(f"Error in RunRecordHandler: {str(e)}")
            return 0
        return len(rows)

    def discard(self) -> None:
        """
        Drops all queued records without writing them.
        """
        with self.queue_lock:
            self.log_queue = []


def get_toolkit_logger():
    """
    Sets up and returns the logger shared by the toolkit and the harness.

    Returns:
        logging.Logger: The configured logger.
    """
    logger = logging.getLogger("TADA_logger")
    # keep records out of the root logger
    logger.propagate = False
    logger.setLevel(logging.INFO)

    formatter = logging.Formatter(
        '%(asctime)s | %(levelname)-8s | %(filename)s:%(lineno)2d | %(message)s', datefmt='%Y-%m-%d %H:%M:%S')

    # One appending log file shared by all runs
    try:
        os.makedirs(LOG_DIR, exist_ok=True)
        file_handler = logging.FileHandler(os.path.join(LOG_DIR, LOG_FILE_NAME), mode='a')
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
    except OSError as e:
        print(f"Log file in '{LOG_DIR}' could not be opened: {str(e)}")

    # Warnings and errors also go to the terminal
    stream_handler = logging.StreamHandler()
    stream_handler.setLevel(logging.WARNING)
    stream_handler.setFormatter(formatter)
    logger.addHandler(stream_handler)

    # Run handler, flushed into each experiment's output directory by the harness
    logger.addHandler(run_record_handler)

    return logger


run_record_handler = RunRecordHandler()

# Configured once at import, repeated handler registration would duplicate every entry.
logger = get_toolkit_logger()
