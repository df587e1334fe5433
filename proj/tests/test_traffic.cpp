#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "strl/traffic.hpp"

using namespace strl;

TEST(Traffic, IngestFifteenMinuteTrace) {
  std::string csv = "timestamp,count\n";
  for (int t = 0; t < 900; ++t) csv += std::to_string(1700000000 + t) + "," + std::to_string(100 + t % 7) + "\n";
  ArrivalSeries series = ingest_trace_from_string(csv);
  EXPECT_EQ(series.length(), 900u);
  EXPECT_EQ(series.start_time, 1700000000);
}

TEST(Traffic, IngestSingleRow) {
  ArrivalSeries series = ingest_trace_from_string("timestamp,count\n0,5\n");
  ASSERT_EQ(series.length(), 1u);
  EXPECT_DOUBLE_EQ(series.rates[0], 5.0);
}

TEST(Traffic, IngestFillsGapsWithZero) {
  ArrivalSeries series = ingest_trace_from_string("timestamp,count\n0,3\n2,4\n");
  ASSERT_EQ(series.length(), 3u);
  EXPECT_DOUBLE_EQ(series.rates[0], 3.0);
  EXPECT_DOUBLE_EQ(series.rates[1], 0.0);
  EXPECT_DOUBLE_EQ(series.rates[2], 4.0);
}

TEST(Traffic, IngestAccumulatesDuplicateTimestamps) {
  ArrivalSeries series = ingest_trace_from_string("timestamp,count\n5,2\n5,3\n");
  ASSERT_EQ(series.length(), 1u);
  EXPECT_DOUBLE_EQ(series.rates[0], 5.0);
}

TEST(Traffic, IngestErrors) {
  EXPECT_THROW(ingest_trace_from_string("timestamp,count\n0,abc\n"), ParseError);
  EXPECT_THROW(ingest_trace_from_string("timestamp,count\n0,-1\n"), ValidationError);
  EXPECT_THROW(ingest_trace_from_string("timestamp,count\n"), ValidationError);
  EXPECT_THROW(ingest_trace_from_string(""), ValidationError);
  EXPECT_THROW(ingest_trace_from_string("time,count\n0,1\n"), ParseError);
  EXPECT_THROW(ingest_trace_from_string("timestamp,count\n5,1\n3,1\n"), ValidationError);
}

TEST(Traffic, SynthesizeDegenerateConstantSeries) {
  ArrivalSeries series = synthesize_arrivals(100.0, {}, 0.0, 50, 7);
  for (double r : series.rates) EXPECT_DOUBLE_EQ(r, 100.0);
}

TEST(Traffic, SynthesizeIsDeterministic) {
  ArrivalSeries a = synthesize_arrivals(500.0, {0.8}, 10.0, 1000, 42);
  ArrivalSeries b = synthesize_arrivals(500.0, {0.8}, 10.0, 1000, 42);
  EXPECT_EQ(a.rates, b.rates);
  ArrivalSeries c = synthesize_arrivals(500.0, {0.8}, 10.0, 1000, 43);
  EXPECT_NE(a.rates, c.rates);
}

TEST(Traffic, SynthesizeRejectsNonStationaryCoefficients) {
  EXPECT_THROW(synthesize_arrivals(100.0, {1.0}, 1.0, 10, 0), ValidationError);
  EXPECT_THROW(synthesize_arrivals(100.0, {1.5}, 1.0, 10, 0), ValidationError);
  EXPECT_THROW(synthesize_arrivals(100.0, {0.5, 0.6}, 1.0, 10, 0), ValidationError);
  EXPECT_NO_THROW(synthesize_arrivals(100.0, {0.5, 0.4}, 1.0, 10, 0));
}

TEST(Traffic, Ar1SampleAcfMatchesClosedForm) {
  // For AR(1) with coefficient phi, ACF(k) = phi^k.
  const double phi = 0.9;
  ArrivalSeries series = synthesize_arrivals(10000.0, {phi}, 50.0, 50000, 11);
  AcfResult result = acf(series, 10);
  for (std::size_t k = 1; k <= 10; ++k)
    EXPECT_NEAR(result.coefficients[k], std::pow(phi, static_cast<double>(k)), 0.05) << "lag " << k;
}

TEST(Traffic, SynthesizedMeanTracksBaseRate) {
  ArrivalSeries series = synthesize_arrivals(1000.0, {0.9}, 30.0, 10000, 3);
  EXPECT_NEAR(series.mean(), 1000.0, 50.0);  // within 5%
}

TEST(Traffic, WhiteNoiseAcfStaysInsideConfidenceBand) {
  ArrivalSeries series = synthesize_arrivals(1000.0, {}, 25.0, 10000, 17);
  AcfResult result = acf(series, 40);
  std::size_t inside = 0;
  for (std::size_t k = 1; k <= 40; ++k)
    if (std::abs(result.coefficients[k]) < result.ci_halfwidth) ++inside;
  EXPECT_GE(inside, 38u);  // >= 95% of 40 lags
}

TEST(Traffic, AlternatingSeriesHasAcfMinusOneAtLagOne) {
  ArrivalSeries series;
  for (int t = 0; t < 1000; ++t) series.rates.push_back(t % 2 == 0 ? 2.0 : 1.0);
  AcfResult result = acf(series, 2);
  EXPECT_NEAR(result.coefficients[1], -1.0, 1e-2);
  EXPECT_DOUBLE_EQ(result.coefficients[0], 1.0);
}

TEST(Traffic, DefaultGeneratorStaysAboveTheBandThroughLag40) {
  ArrivalSeries series = default_synthetic_arrivals(233233.0, 10000, 0);
  AcfResult result = acf(series, 40);
  for (std::size_t k = 1; k <= 40; ++k)
    EXPECT_GT(result.coefficients[k], result.ci_halfwidth) << "lag " << k;
}

TEST(Traffic, AcfArgumentAndValidationErrors) {
  ArrivalSeries series;
  series.rates.assign(10, 1.0);
  EXPECT_THROW(acf(series, 10), ArgumentError);   // max_lag >= length
  EXPECT_THROW(acf(series, 0), ArgumentError);
  EXPECT_THROW(acf(series, 5), ValidationError);  // zero variance
}

TEST(Traffic, AcfShiftAndScaleInvariance) {
  ArrivalSeries base = synthesize_arrivals(100.0, {0.7}, 5.0, 2000, 23);
  ArrivalSeries shifted = base;
  for (auto& r : shifted.rates) r += 1234.5;
  ArrivalSeries scaled = base;
  for (auto& r : scaled.rates) r *= 7.25;
  AcfResult b = acf(base, 20), sh = acf(shifted, 20), sc = acf(scaled, 20);
  for (std::size_t k = 0; k <= 20; ++k) {
    EXPECT_NEAR(b.coefficients[k], sh.coefficients[k], 1e-9);
    EXPECT_NEAR(b.coefficients[k], sc.coefficients[k], 1e-9);
  }
}

TEST(Traffic, AcfCoefficientsAreBounded) {
  ArrivalSeries series = synthesize_arrivals(50.0, {0.95}, 10.0, 3000, 31);
  AcfResult result = acf(series, 100);
  for (double c : result.coefficients) {
    EXPECT_LE(c, 1.0);
    EXPECT_GE(c, -1.0);
  }
}

TEST(Traffic, AcfCsvLayout) {
  ArrivalSeries series = synthesize_arrivals(100.0, {0.5}, 5.0, 500, 1);
  const std::string csv = acf_to_csv(acf(series, 3));
  EXPECT_EQ(csv.rfind("lag,coefficient,ci_halfwidth\n0,1,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);  // header + 4 lag rows
}
