#include <cmath>
#include <sstream>

#include "doctest.h"
#include "esp/common/error.hpp"
#include "esp/common/rng.hpp"
#include "esp/spectra/msp.hpp"
#include "esp/spectra/spectrum.hpp"

using namespace esp;
using namespace esp::spectra;

namespace {

ErrorCode msp_error(const std::string& text, std::size_t* line = nullptr) {
  try {
    parse_msp_text(text);
  } catch (const Error& e) {
    if (line) *line = e.offset().value_or(0);
    return e.code();
  }
  FAIL("expected MSP failure");
  return ErrorCode::InvalidArgument;
}

double round5(double v) { return std::round(v * 1e5) / 1e5; }

}  // namespace

TEST_CASE("bin_peaks floor rule, summation, drops") {
  std::vector<Peak> one = {{100.4, 50}};
  auto s = bin_peaks(one, 1000);
  CHECK(s.size() == 1000);
  CHECK(s.intensities[100] == 50);
  CHECK(s.sum() == 50);

  std::vector<Peak> two = {{100.2, 10}, {100.9, 5}};
  CHECK(bin_peaks(two, 1000).intensities[100] == 15);

  CHECK(bin_peaks(std::vector<Peak>{}, 1000).is_zero());

  BinningStats stats;
  std::vector<Peak> high = {{999.99, 1}, {1000.0, 2}, {1500, 3}};
  auto h = bin_peaks(high, 1000, &stats);
  CHECK(stats.dropped == 2);
  CHECK(h.intensities[999] == 1);

  std::vector<Peak> neg = {{10, -1}};
  try {
    bin_peaks(neg, 1000);
    FAIL("expected NegativeIntensity");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NegativeIntensity);
  }
}

TEST_CASE("bin_peaks conserves intensity below P") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Peak> peaks;
    double expected = 0;
    const int n = static_cast<int>(rng.below(30));
    for (int i = 0; i < n; ++i) {
      Peak p{rng.uniform(0, 1200), rng.uniform(0, 100)};
      if (p.mz < 1000) expected += p.intensity;
      peaks.push_back(p);
    }
    CHECK(bin_peaks(peaks, 1000).sum() == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("l2_normalize") {
  BinnedSpectrum s;
  s.intensities = {3, 4};
  auto n = l2_normalize(s);
  CHECK(n.intensities[0] == doctest::Approx(0.6));
  CHECK(n.intensities[1] == doctest::Approx(0.8));
  auto nn = l2_normalize(n);
  CHECK(nn.intensities[0] == doctest::Approx(n.intensities[0]).epsilon(1e-15));
  CHECK(nn.intensities[1] == doctest::Approx(n.intensities[1]).epsilon(1e-15));

  BinnedSpectrum z;
  z.intensities = {0, 0, 0};
  bool was_zero = false;
  auto zn = l2_normalize(z, &was_zero);
  CHECK(was_zero);
  CHECK(zn.is_zero());
}

TEST_CASE("cosine_similarity") {
  std::vector<double> a = {1, 0, 0, 0}, b = {1, 1, 0, 0}, c = {0, 0, 2, 1};
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
  CHECK(cosine_similarity(a, c) == 0.0);
  CHECK(std::abs(cosine_similarity(a, b) - 0.70711) < 1e-5);
  bool zero = false;
  std::vector<double> z = {0, 0, 0, 0};
  CHECK(cosine_similarity(a, z, &zero) == 0.0);
  CHECK(zero);
  CHECK_THROWS_AS(cosine_similarity(a, std::vector<double>{1, 2}), Error);

  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(16), y(16);
    for (auto& v : x) v = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0, 10);
    for (auto& v : y) v = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0, 10);
    const double cxy = cosine_similarity(x, y);
    CHECK(cxy == doctest::Approx(cosine_similarity(y, x)).epsilon(1e-14));
    CHECK(cxy >= 0.0);
    CHECK(cxy <= 1.0 + 1e-12);
    const double scale = rng.uniform(0.01, 100);
    std::vector<double> xs = x;
    for (auto& v : xs) v *= scale;
    CHECK(cosine_similarity(xs, y) == doctest::Approx(cxy).epsilon(1e-12));
  }
}

TEST_CASE("instrument setting one-hot and energy normalisation") {
  auto s = InstrumentSetting::from_raw("[M+Na]+", 35);
  auto f = s.features();
  CHECK(f.size() == InstrumentSetting::feature_size());
  int nonzero = 0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) nonzero += f[i] != 0.0;
  CHECK(nonzero == 1);
  CHECK(f.back() == doctest::Approx(0.35));
  CHECK(InstrumentSetting::from_raw("[M+H]+", 250).collision_energy() == 1.0);
  CHECK(InstrumentSetting::from_raw("[M+H]+", -5).collision_energy() == 0.0);
  auto other = InstrumentSetting::from_raw("[M+K]+", 10);
  CHECK(other.precursor_index() == InstrumentSetting::precursor_vocabulary().size() - 1);
  CHECK(precursor_mz(100.0, "[M+H]+") == doctest::Approx(101.007276));
}

TEST_CASE("to_peak_document quantisation") {
  BinnedSpectrum s;
  s.intensities.assign(10, 0.0);
  s.intensities[4] = 0.7;
  auto d = to_peak_document(s, 100);
  REQUIRE(d.counts.size() == 1);
  CHECK(d.counts.at(4) == 100);

  s.intensities[6] = 0.7;
  d = to_peak_document(s, 100);
  CHECK(d.counts.at(4) == 100);
  CHECK(d.counts.at(6) == 100);

  // 1% of the base peak with quantisation 50: round(0.5) = 1, so it is kept.
  BinnedSpectrum t;
  t.intensities.assign(10, 0.0);
  t.intensities[1] = 100;
  t.intensities[2] = 1;
  auto dt = to_peak_document(t, 50);
  CHECK(dt.counts.at(2) == 1);
  CHECK(dt.counts.at(1) == 50);

  t.intensities[3] = 0.2;
  CHECK(to_peak_document(t, 50).counts.count(3) == 0);
}

TEST_CASE("parse_msp records and errors") {
  const std::string one =
      "Name: caffeine\nPrecursorMZ: 195.08765\nPrecursor_type: [M+H]+\n"
      "Collision_energy: NCE=35%\nInChIKey: RYYVLZVUVIJVGH\nNum Peaks: 2\n"
      "138.066 100\n195.0877 45.5\n";
  auto recs = parse_msp_text(one);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].name == "caffeine");
  CHECK(recs[0].peaks.size() == 2);
  CHECK(*recs[0].precursor_mz == doctest::Approx(195.08765));
  CHECK(recs[0].collision_energy_value() == 35.0);
  CHECK(recs[0].find("inchikey").value() == "RYYVLZVUVIJVGH");
  CHECK(recs[0].instrument().collision_energy() == doctest::Approx(0.35));

  auto two = parse_msp_text(one + "\n" + "Name: b\nNum Peaks: 1\n10 1\n");
  CHECK(two.size() == 2);

  std::size_t line = 0;
  CHECK(msp_error("Name: x\nNum Peaks: 3\n1 1\n2 2\n", &line) == ErrorCode::PeakCountMismatch);
  CHECK(line == 2);
  CHECK(msp_error("Name: x\nNum Peaks: 2\n1 1\nabc 2\n", &line) == ErrorCode::MalformedPeakLine);
  CHECK(line == 4);
  CHECK(msp_error("Name: x\nPrecursorMZ: 12\n\n") == ErrorCode::MalformedRecord);
}

TEST_CASE("parse_msp inverts render_msp at five decimals") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MspRecord> recs;
    const int n = 1 + static_cast<int>(rng.below(4));
    for (int r = 0; r < n; ++r) {
      MspRecord rec;
      rec.name = "mol" + std::to_string(trial) + "_" + std::to_string(r);
      if (rng.uniform() < 0.7) rec.precursor_mz = round5(rng.uniform(50, 900));
      rec.precursor_type = rng.uniform() < 0.5 ? "[M+H]+" : "[M+Na]+";
      rec.collision_energy = std::to_string(rng.below(80));
      rec.metadata.emplace_back("Formula", "C6H12O6");
      const int np = static_cast<int>(rng.below(20));
      for (int p = 0; p < np; ++p) rec.peaks.push_back({round5(rng.uniform(0, 999)), round5(rng.uniform(0, 1000))});
      recs.push_back(rec);
    }
    const std::string text = render_msp_text(recs);
    auto back = parse_msp_text(text);
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(back[i].name == recs[i].name);
      CHECK(back[i].precursor_mz.has_value() == recs[i].precursor_mz.has_value());
      if (recs[i].precursor_mz) CHECK(round5(*back[i].precursor_mz) == *recs[i].precursor_mz);
      CHECK(back[i].precursor_type == recs[i].precursor_type);
      CHECK(back[i].collision_energy == recs[i].collision_energy);
      CHECK(back[i].metadata == recs[i].metadata);
      REQUIRE(back[i].peaks.size() == recs[i].peaks.size());
      for (std::size_t p = 0; p < recs[i].peaks.size(); ++p) {
        CHECK(round5(back[i].peaks[p].mz) == recs[i].peaks[p].mz);
        CHECK(round5(back[i].peaks[p].intensity) == recs[i].peaks[p].intensity);
      }
    }
    CHECK(render_msp_text(back) == text);
  }
}

TEST_CASE("binned spectrum TSV export") {
  BinnedSpectrum s;
  s.intensities.assign(20, 0.0);
  s.intensities[3] = 0.25;
  s.intensities[17] = 1.0 / 3.0;
  std::stringstream ss;
  write_spectrum_tsv(ss, s);
  CHECK(ss.str().rfind("#P=20\n", 0) == 0);
  auto back = read_spectrum_tsv(ss);
  CHECK(back.intensities == s.intensities);
}
