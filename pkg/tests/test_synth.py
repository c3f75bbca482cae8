import numpy as np

from loadagg.core import SLOTS_PER_DAY, LoadClass, day_weekday
from loadagg.predictability import apen
from loadagg.synth import SynthSpec, generate, spiky_meters, sme_meter, write_corpus


def test_counts_and_classes():
    c = generate(SynthSpec(n_residential=4, n_sme=3, n_days=3))
    assert sum(v is LoadClass.RESIDENTIAL for v in c.classes.values()) == 4
    assert sum(v is LoadClass.SME for v in c.classes.values()) == 3
    assert all(len(s) == 3 * SLOTS_PER_DAY for s in c.meters.values())


def test_full_vacancy_stays_near_base():
    vac = generate(SynthSpec(n_residential=10, n_sme=0, n_days=2, vacancy_prob=1.0))
    occ = generate(SynthSpec(n_residential=10, n_sme=0, n_days=2, vacancy_prob=0.0))
    for m in vac.meters:
        v, o = vac.meters[m].values, occ.meters[m].values
        assert v.mean() < 0.5 * o.mean()
        assert v.max() < o.max()


def test_sme_weekends_within_noise_band():
    spec = SynthSpec(n_residential=0, n_sme=10, n_days=14)
    wd = day_weekday(spec.start_day + np.arange(spec.n_days), spec.epoch_weekday)
    for i in range(10):
        days = sme_meter(spec, i).reshape(spec.n_days, SLOTS_PER_DAY)
        weekend = days[wd >= 5]
        assert weekend.size
        assert np.ptp(weekend) <= 4 * spec.sme_noise
        assert days[wd < 5].max() > weekend.max() + 0.5


def test_byte_identical_files(tmp_path):
    spec = SynthSpec(n_residential=3, n_sme=2, n_days=2)
    write_corpus(generate(spec), tmp_path / "a")
    write_corpus(generate(spec), tmp_path / "b")
    for name in ("readings.txt", "classes.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_residential_less_regular_than_sme():
    c = generate(SynthSpec(n_residential=8, n_sme=8, n_days=20))
    res = [apen(s.values) for s in c.meters.values() if s.load_class is LoadClass.RESIDENTIAL]
    sme = [apen(s.values) for s in c.meters.values() if s.load_class is LoadClass.SME]
    assert np.mean(sme) < np.mean(res)


def test_spiky_meters_pinned():
    a, b = spiky_meters(3, 5), spiky_meters(3, 5)
    assert [m.meter_id for m in a] == [m.meter_id for m in b]
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
