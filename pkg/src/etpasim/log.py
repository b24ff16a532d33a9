"""
Logging for etpasim. Sweep workers may run in separate processes, so every
process sends its records through a multiprocessing queue to one listener in
the main process, which writes them to a daily logfile and to the terminal.

Standard-library pieces used:
    QueueListener (main process): drains the queue into the file and terminal handlers
    QueueHandler (every producer): pushes records onto the queue
"""

import atexit
import datetime
import logging
import multiprocessing as mp
import os
from logging.handlers import QueueHandler, QueueListener
from multiprocessing import Queue

from etpasim.settings import get_user_config_folder, init_settings

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(processName)-12s - %(levelname)-8s - %(name)s - %(message)s"


def _as_level(log_level: str | int) -> int:
    if isinstance(log_level, str):
        return getattr(logging, log_level.upper(), logging.DEBUG)
    return log_level


class LoggingManager:
    """
    Owns the log queue and the listener thread that collects records from
    all producer processes.
    """

    def __init__(self):
        self.log_queue: Queue = None
        self.listener: QueueListener = None
        self.handlers = []

    def start_listener(self, log_filepath: str, log_level: str | int):
        """
        Create the queue and start listening for records.

        args:
            log_filepath (str): Path to the log file
            log_level (str or int): Logging level
        """
        log_level = _as_level(log_level)
        self.stop_listener()

        self.log_queue = Queue()
        formatter = logging.Formatter(LOG_FORMAT)

        file_handler = logging.FileHandler(log_filepath, mode="a")
        file_handler.setFormatter(formatter)
        file_handler.setLevel(log_level)

        terminal_handler = logging.StreamHandler()
        terminal_handler.setFormatter(formatter)
        terminal_handler.setLevel(log_level)

        self.handlers = [file_handler, terminal_handler]
        self.listener = QueueListener(
            self.log_queue, *self.handlers, respect_handler_level=True
        )
        self.listener.start()

        logger.info(
            f"Logging listener started with level {logging.getLevelName(log_level)}"
        )

    def stop_listener(self):
        if self.listener:
            self.listener.stop()
            self.listener = None
            for handler in self.handlers:
                handler.close()
            self.handlers = []

    def get_logfile_name(self):
        """
        Name of today's logfile: "log_<year>_<month>_<day>.log"
        """
        today = datetime.date.today()
        return f"log_{today.year:04d}_{today.month:02d}_{today.day:02d}.log"

    def get_queue(self) -> Queue:
        """Get the logging queue for use by worker processes."""
        return self.log_queue

    def create_log_dir(self, log_dir: str) -> str:
        """
        Create the logs directory if it doesn't exist and return its expanded path.
        Falls back to the user config folder when the directory cannot be created.
        """
        if not log_dir:
            log_dir = "logs"

        log_dir = os.path.expanduser(log_dir)

        try:
            os.makedirs(log_dir, exist_ok=True)
        except (PermissionError, FileExistsError):
            logger.warning(f"Cannot use log directory {log_dir}, using default")
            log_dir = os.path.join(get_user_config_folder(), "etpasim", "logs")
            os.makedirs(log_dir, exist_ok=True)

        return log_dir


def configure_process_logging(
    log_queue: Queue = None,
    logger_name: str = "etpasim",
    log_level: str | int = "DEBUG",
    process_name: str = None,
):
    """
    Route a process's `etpasim` records into the shared queue. Runs in the
    main process and as the initializer of every sweep worker.

    args:
        log_queue: queue owned by the LoggingManager; None leaves the logger without handlers
        logger_name (str): Name of the logger (default: "etpasim")
        log_level (int or str): Logging level to set
        process_name (str): Custom process name to output in logs
    """
    log_level = _as_level(log_level)

    if process_name:
        mp.current_process().name = process_name

    ns_logger = logging.getLogger(logger_name)
    ns_logger.handlers.clear()
    ns_logger.propagate = False

    if log_queue is not None:
        ns_logger.addHandler(QueueHandler(log_queue))

    ns_logger.setLevel(log_level)

    logger.debug(
        f"process logger configured with level {logging.getLevelName(log_level)}"
    )


def setup_logging(args):
    """
    Start the listener with the level and directory taken from the CLI args
    and the user settings.
    """
    logging_manager = get_logging_manager()
    config_singleton = init_settings(args.config_filepath)

    log_level = args.log_level or config_singleton.read_value("ETPASIM_LOG_LEVEL")
    log_dir = logging_manager.create_log_dir(
        config_singleton.read_value("ETPASIM_LOG_DIRECTORY")
    )
    logfile_path = os.path.join(log_dir, logging_manager.get_logfile_name())

    logging_manager.start_listener(log_filepath=logfile_path, log_level=log_level)
    configure_process_logging(logging_manager.log_queue, log_level=log_level)

    atexit.register(logging_manager.stop_listener)

    return logging_manager


# Created once, on first import of this module.
_logging_manager = LoggingManager()


def get_logging_manager() -> LoggingManager:
    return _logging_manager
