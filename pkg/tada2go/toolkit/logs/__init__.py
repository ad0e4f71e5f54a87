from tada2go.toolkit.logs.config_logging import logger, run_record_handler

__all__ = ['logger', 'run_record_handler']
