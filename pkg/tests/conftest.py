import numpy as np
import pytest

from voicefem.features import melspectrogram
from voicefem.synth import synth_read_speech
from voicefem.training import CorpusIndex, MelStatsProvider, SpeakerRecord

from acceptance_report import LINES as _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synthetic_corpus():
    """20 synthetic speakers (10 low-pitch 'M', 10 high-pitch 'F') with
    precomputed 24-band log-Mel tables."""
    rng = np.random.default_rng(77)
    tables, speakers = {}, []
    for i in range(20):
        high = i >= 10
        f0 = rng.normal(210, 15) if high else rng.normal(110, 10)
        scale = rng.normal(1.18 if high else 1.0, 0.03)
        sid = f"spk{i:03d}"
        buf = synth_read_speech(f0, 3.5, formant_scale=scale, seed=500 + i)
        tables[sid] = melspectrogram(buf, 24)
        speakers.append(SpeakerRecord(sid, "F" if high else "M", "synth", (sid,)))
    idx = CorpusIndex(tuple(speakers))
    return idx, MelStatsProvider(tables), tables
