#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "codamort/hmd.hpp"
#include "codamort/synthetic.hpp"

using namespace codamort;

namespace {

std::string ladder_rows(int year, int skip_age = -1) {
    std::string s;
    for (int x = 0; x <= 110; ++x) {
        if (x == skip_age) continue;
        s += std::to_string(year) + "\t" +
             (x == 110 ? "110+" : std::to_string(x)) + "\t0.01\t0.02\t0.015\n";
    }
    return s;
}

std::string with_header(const std::string& rows) {
    return "Testland, Death rates (period 1x1)\n\n"
           "  Year   Age   Female   Male   Total\n" +
           rows;
}

}  // namespace

TEST(ParseHmd, ReadsOpenAgeRow) {
    std::string rows;
    for (int x = 0; x <= 109; ++x)
        rows += "1990\t" + std::to_string(x) + "\t0.01\t0.02\t0.015\n";
    rows += "1990\t110+\t0.522413\t0.601245\t0.549120\n";
    std::istringstream in(with_header(rows));
    const HmdTable t = parse_hmd(in, HmdKind::rates);
    ASSERT_EQ(t.years.size(), 1u);
    EXPECT_EQ(t.female(0, 110), 0.522413);
    EXPECT_EQ(t.male(0, 110), 0.601245);
    EXPECT_EQ(t.header.size(), 3u);
}

TEST(ParseHmd, MissingValueBecomesNaN) {
    std::string rows;
    for (int x = 0; x <= 110; ++x)
        rows += std::string("1990\t") + (x == 110 ? "110+" : std::to_string(x)) +
                (x == 45 ? "\t.\t0.001\t0.0009\n" : "\t0.01\t0.02\t0.015\n");
    std::istringstream in(with_header(rows));
    const HmdTable t = parse_hmd(in, HmdKind::rates);
    EXPECT_TRUE(std::isnan(t.female(0, 45)));
    EXPECT_EQ(t.male(0, 45), 0.001);
}

TEST(ParseHmd, ErrorsCarryLineNumbers) {
    std::istringstream bad(with_header("1990\t12\tnot_a_number\t0.1\t0.1\n"));
    try {
        parse_hmd(bad, HmdKind::rates);
        FAIL() << "expected MalformedRow";
    } catch (const MalformedRow& e) {
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    }

    std::istringstream short_row(with_header("1990\t12\t0.5\n"));
    EXPECT_THROW(parse_hmd(short_row, HmdKind::rates), MalformedRow);

    std::istringstream empty(
        "Testland, Death rates (period 1x1)\n\nYear Age F M T\n");
    EXPECT_THROW(parse_hmd(empty, HmdKind::rates), MalformedRow);
}

TEST(ParseHmd, IncompleteAgeLadderRejected) {
    std::istringstream in(with_header(ladder_rows(1991, 54)));
    EXPECT_THROW(parse_hmd(in, HmdKind::rates), MissingAgeLadder);
}

TEST(ParseHmd, NonContiguousYearsRejected) {
    std::istringstream in(with_header(ladder_rows(1990) + ladder_rows(1992)));
    EXPECT_THROW(parse_hmd(in, HmdKind::rates), GapInYears);
}

TEST(ParseHmd, SerializeRoundTrip) {
    auto [rates, exposures] = synthetic_tables(SyntheticSpec{});
    const std::string text = serialize_hmd(rates, HmdKind::rates);
    std::istringstream in(text);
    const HmdTable back = parse_hmd(in, HmdKind::rates);
    const std::string text2 = serialize_hmd(back, HmdKind::rates);
    EXPECT_EQ(text, text2);
    EXPECT_EQ(back.years, rates.years);

    const std::string etext = serialize_hmd(exposures, HmdKind::exposures);
    std::istringstream ein(etext);
    EXPECT_EQ(serialize_hmd(parse_hmd(ein, HmdKind::exposures),
                            HmdKind::exposures),
              etext);
}

TEST(BuildGrid, SlicesWindowAndGender) {
    auto [rates, exposures] = synthetic_tables(SyntheticSpec{});
    const StudyWindow window;
    const MortalityGrid g =
        build_grid(rates, exposures, Gender::male, window, "SYN1");
    EXPECT_EQ(g.year_count(), 36);
    EXPECT_EQ(g.years.front(), 1983);
    EXPECT_EQ(g.years.back(), 2018);
    EXPECT_EQ(g.rates(0, 50), rates.male(0, 50));
    EXPECT_EQ(window.train_years(), 28);
    EXPECT_EQ(window.test_years(), 8);
}

TEST(BuildGrid, WindowNotCoveredThrows) {
    SyntheticSpec spec;
    spec.year_begin = 1990;  // starts too late
    auto [rates, exposures] = synthetic_tables(spec);
    EXPECT_THROW(
        build_grid(rates, exposures, Gender::female, StudyWindow{}, "SYN1"),
        WindowNotCovered);
}
