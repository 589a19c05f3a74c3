import logging
import os


def setup_logging(log_dir: str = 'logs', level: str = 'INFO') -> str:
    """Log everything to <log_dir>/sgek.log and INFO+ to the console; returns the log file path."""
    # Clear existing handlers
    root_logger = logging.getLogger()
    root_logger.handlers = []

    os.makedirs(log_dir, exist_ok=True)
    log_file = os.path.join(log_dir, 'sgek.log')
    numeric_level = getattr(logging, str(level).upper(), logging.INFO)
    logging.basicConfig(
        filename=log_file,
        level=numeric_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    # Console output stays short; the file keeps logger names
    console = logging.StreamHandler()
    console.setLevel(max(numeric_level, logging.INFO))
    console.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
    root_logger.addHandler(console)
    return log_file
