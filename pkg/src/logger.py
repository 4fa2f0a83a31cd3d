import logging
import os
import sys

LOG_LEVEL_ENV = "HANKEL_SPECTRA_LOG_LEVEL"
LOG_FILE_ENV = "HANKEL_SPECTRA_LOG_FILE"
_configured = False


def configure_logging(level=None):
	global _configured
	if _configured:
		return
	level_name = (level or os.getenv(LOG_LEVEL_ENV) or "INFO").upper()
	handlers = [logging.StreamHandler(sys.stderr)]
	log_file = os.getenv(LOG_FILE_ENV)
	if log_file:
		handlers.append(logging.FileHandler(os.path.abspath(log_file)))
	logging.basicConfig(
		level=getattr(logging, level_name, logging.INFO),
		format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
		handlers=handlers,
	)
	logging.getLogger(__name__).debug(f"Logging initialized at {level_name}. Log file: {log_file or '-'}")
	_configured = True


def get_logger(name):
	configure_logging()
	return logging.getLogger(name)
