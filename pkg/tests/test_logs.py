import threading

import pandas as pd

from tada2go.toolkit.logs.config_logging import (RunRecordHandler, logger,
                                                 run_record_handler)


def test_logging_from_a_worker_thread_returns():
    run_record_handler.discard()
    worker = threading.Thread(target=logger.info, args=("worker record",), daemon=True)
    worker.start()
    worker.join(timeout=5)
    assert not worker.is_alive()
    run_record_handler.discard()


def test_queued_records_are_written_once(tmp_path):
    run_record_handler.discard()
    logger.info("first record")
    logger.warning("second record")
    path = str(tmp_path / 'run_log.csv')
    assert run_record_handler.write_queued_logs(path) == 2
    assert run_record_handler.write_queued_logs(path) == 0
    frame = pd.read_csv(path)
    assert list(frame.columns) == RunRecordHandler.COLUMNS
    assert frame['log_message'].tolist() == ["first record", "second record"]
    assert frame['log_level'].tolist() == ['INFO', 'WARNING']
