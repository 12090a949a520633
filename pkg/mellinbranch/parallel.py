"""Run replica tasks in worker processes. Results never depend on the number of workers."""
import atexit
import logging
import multiprocessing
import sys
import traceback
from typing import Callable, List, Sequence

import numpy as np
from tqdm import tqdm

logger = logging.getLogger(__name__)


def split_similar_chunks(vector: Sequence, n_chunks: int):
    chunk_size = int(np.ceil(len(vector) / n_chunks))
    for i in range(0, len(vector), chunk_size):
        yield vector[i:i + chunk_size]


class ReplicaWorker(object):
    """Evaluate a task on batches of replica indices in a separate process.

    The task is inherited by the forked process, so it does not need to be picklable;
    only the indices and the results travel through the pipe.
    """

    # Message types for communication via the pipe.
    _CALL = 2
    _RESULT = 3
    _EXCEPTION = 4
    _CLOSE = 5

    def __init__(self, task: Callable):
        context = multiprocessing.get_context("fork")
        self._conn, conn = context.Pipe()
        self._process = context.Process(target=self._worker, args=(task, conn), daemon=True)
        atexit.register(self.close)
        self._process.start()

    def call(self, indices: Sequence[int]):
        """Send a batch of indices and return a promise that blocks for the results."""
        self._conn.send((self._CALL, list(indices)))
        return self._receive

    def close(self):
        """Send a close message to the external process and join it."""
        try:
            self._conn.send((self._CLOSE, None))
            self._conn.close()
        except (IOError, OSError):
            # The connection was already closed.
            pass
        self._process.join()

    def _receive(self):
        message, payload = self._conn.recv()
        # Re-raise exceptions in the main process.
        if message == self._EXCEPTION:
            error, stacktrace = payload
            logger.error("replica worker failed:\n%s", stacktrace)
            raise error
        if message == self._RESULT:
            return payload
        raise KeyError("Received message of unexpected type {}".format(message))

    def _worker(self, task: Callable, conn):
        while True:
            try:
                # Only block for short times to have keyboard exceptions be raised.
                if not conn.poll(0.1):
                    continue
                message, payload = conn.recv()
            except (EOFError, KeyboardInterrupt):
                break
            if message == self._CLOSE:
                break
            if message != self._CALL:
                raise KeyError("Received message of unknown type {}".format(message))
            try:
                conn.send((self._RESULT, [task(i) for i in payload]))
            except Exception as error:  # pylint: disable=broad-except
                stacktrace = "".join(traceback.format_exception(*sys.exc_info()))
                conn.send((self._EXCEPTION, (error, stacktrace)))
        conn.close()


class ReplicaPool(object):
    """Map a task over replica indices with `threads` worker processes.

    With threads <= 1 everything runs in the calling process.
    """

    def __init__(self, threads: int = 1, progress: bool = False, description: str = None):
        self.threads = max(int(threads), 1)
        self.progress = progress
        self.description = description

    def map(self, task: Callable, indices: Sequence[int]) -> List:
        indices = list(indices)
        if self.threads <= 1 or len(indices) <= 1:
            iterator = tqdm(indices, desc=self.description, disable=not self.progress)
            return [task(i) for i in iterator]
        n_workers = min(self.threads, len(indices))
        workers = [ReplicaWorker(task) for _ in range(n_workers)]
        try:
            promises = [worker.call(chunk) for worker, chunk
                        in zip(workers, split_similar_chunks(indices, n_workers))]
            results = []
            for promise in tqdm(promises, desc=self.description, disable=not self.progress):
                results += promise()
        finally:
            for worker in workers:
                worker.close()
        logger.debug("mapped %d replicas over %d workers", len(indices), n_workers)
        return results
