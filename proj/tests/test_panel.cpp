#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "eventlens/panel.hpp"
#include "test_support.hpp"

namespace el = eventlens;
using el::testing::code_of;
using el::testing::make_series;
using el::testing::message_of;

namespace {
const el::Date d1(2022, 1, 3), d2(2022, 1, 4), d3(2022, 1, 5), d4(2022, 1, 6);
}

TEST(Align, IntersectsDates) {
  std::vector<el::RawSeries> s = {make_series("A", d1, {1, 2, 3}), make_series("B", d2, {4, 5, 6})};
  auto p = el::align(s, {el::BarField::close});
  EXPECT_EQ(p.dates(), (std::vector<el::Date>{d2, d3}));
  EXPECT_EQ(el::column(p, {"A", el::BarField::close}), (std::vector<double>{2, 3}));
  EXPECT_EQ(el::column(p, {"B", el::BarField::close}), (std::vector<double>{4, 5}));
}

TEST(Align, SingleSeriesIsIdentity) {
  std::vector<el::RawSeries> s = {make_series("A", d1, {1, 2, 3})};
  auto p = el::align(s, {el::BarField::close});
  EXPECT_EQ(p.columns().size(), 1u);
  EXPECT_EQ(el::column(p, {"A", el::BarField::close}), (std::vector<double>{1, 2, 3}));
}

TEST(Align, FieldsAreCopiedVerbatim) {
  std::mt19937_64 rng(11);
  std::vector<el::RawSeries> s = {el::testing::random_series(rng, "A", 40)};
  auto p = el::align(s, el::kAllFields);
  ASSERT_EQ(p.rows(), 40u);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(p.column({"A", el::BarField::open})[i], s[0].bars[i].open);
    EXPECT_EQ(p.column({"A", el::BarField::high})[i], s[0].bars[i].high);
    EXPECT_EQ(p.column({"A", el::BarField::low})[i], s[0].bars[i].low);
    EXPECT_EQ(p.column({"A", el::BarField::close})[i], s[0].bars[i].close);
  }
}

TEST(Align, Errors) {
  std::vector<el::RawSeries> disjoint = {make_series("A", d1, {1, 2}), make_series("B", d3, {1, 2})};
  EXPECT_EQ(code_of([&] { el::align(disjoint, {el::BarField::close}); }),
            el::ErrorCode::empty_intersection);
  std::vector<el::RawSeries> dup = {make_series("A", d1, {1, 2}), make_series("A", d1, {1, 2})};
  EXPECT_EQ(code_of([&] { el::align(dup, {el::BarField::close}); }), el::ErrorCode::duplicate_symbol);
  std::vector<el::RawSeries> none;
  EXPECT_EQ(code_of([&] { el::align(none, {el::BarField::close}); }), el::ErrorCode::empty_input);
  std::vector<el::RawSeries> empty = {make_series("A", d1, {})};
  EXPECT_EQ(code_of([&] { el::align(empty, {el::BarField::close}); }), el::ErrorCode::empty_input);
}

TEST(Align, OrderInsensitive) {
  std::mt19937_64 rng(5);
  std::vector<el::RawSeries> s;
  for (int i = 0; i < 4; ++i) s.push_back(el::testing::random_series(rng, "S" + std::to_string(i), 80));
  const auto reference = el::align(s, el::kAllFields);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(s.begin(), s.end(), rng);
    EXPECT_EQ(el::align(s, el::kAllFields), reference);
  }
}

TEST(Slice, Cases) {
  std::vector<el::RawSeries> s = {make_series("A", d1, {1, 2, 3, 4})};
  auto p = el::align(s, {el::BarField::close});
  EXPECT_EQ(el::slice(p, {d1, d4}), p);
  EXPECT_EQ(el::slice(p, {el::Date(2021, 1, 1), el::Date(2023, 1, 1)}), p);
  auto one = el::slice(p, {d2, d2});
  EXPECT_EQ(one.rows(), 1u);
  EXPECT_EQ(one.column({"A", el::BarField::close})[0], 2.0);
  EXPECT_EQ(code_of([&] { el::slice(p, {el::Date(2021, 1, 1), el::Date(2021, 12, 31)}); }),
            el::ErrorCode::empty_window);
}

TEST(Slice, ComposesAsIntersection) {
  std::mt19937_64 rng(9);
  std::vector<el::RawSeries> s = {el::testing::random_series(rng, "A", 120),
                                  el::testing::random_series(rng, "B", 120)};
  const auto p = el::align(s, el::kAllFields);
  const auto first = p.dates().front();
  const auto span = (p.dates().back().days() - first.days()).count();
  std::uniform_int_distribution<int> off(0, static_cast<int>(span));
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    int a = off(rng), b = off(rng), c = off(rng), d = off(rng);
    el::DateWindow w1(first + std::min(a, b), first + std::max(a, b));
    el::DateWindow w2(first + std::min(c, d), first + std::max(c, d));
    auto both = w1.intersect(w2);
    if (!both) continue;
    std::optional<el::AlignedPanel> lhs, rhs;
    try {
      lhs = el::slice(el::slice(p, w1), w2);
    } catch (const el::Error&) {
    }
    try {
      rhs = el::slice(p, *both);
    } catch (const el::Error&) {
    }
    if (lhs && rhs) {
      EXPECT_EQ(*lhs, *rhs);
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(Column, PresentAndAbsent) {
  std::vector<el::RawSeries> s = {make_series("A", d1, {1, 2, 3})};
  auto p = el::align(s, {el::BarField::close, el::BarField::open});
  EXPECT_EQ(el::column(p, {"A", el::BarField::open}).size(), p.rows());
  EXPECT_EQ(code_of([&] { el::column(p, {"B", el::BarField::close}); }), el::ErrorCode::unknown_column);
  EXPECT_NE(message_of([&] { el::column(p, {"B", el::BarField::close}); }).find("B.close"),
            std::string::npos);
}

TEST(AlignedPanel, ConstructionEnforcesInvariants) {
  el::AlignedPanel::Columns short_col{{{"A", el::BarField::close}, {1.0}}};
  EXPECT_THROW(el::AlignedPanel({d1, d2}, short_col), el::Error);
  el::AlignedPanel::Columns ok{{{"A", el::BarField::close}, {1.0, 2.0}}};
  EXPECT_THROW(el::AlignedPanel({d2, d1}, ok), el::Error);
  EXPECT_THROW(el::AlignedPanel({d1, d1}, ok), el::Error);
  el::AlignedPanel::Columns nan_col{{{"A", el::BarField::close}, {1.0, std::nan("")}}};
  EXPECT_THROW(el::AlignedPanel({d1, d2}, nan_col), el::Error);
}

TEST(ColumnKey, ParseAndFormat) {
  EXPECT_EQ(el::ColumnKey::parse("USD_IDX.close"), (el::ColumnKey{"USD_IDX", el::BarField::close}));
  EXPECT_EQ(el::ColumnKey::parse("BRK.B.open"), (el::ColumnKey{"BRK.B", el::BarField::open}));
  EXPECT_EQ((el::ColumnKey{"WTI", el::BarField::low}).str(), "WTI.low");
  EXPECT_THROW(el::ColumnKey::parse("WTI"), el::Error);
  EXPECT_THROW(el::ColumnKey::parse("WTI.volume"), el::Error);
}

TEST(DateWindow, Basics) {
  EXPECT_THROW(el::DateWindow(d2, d1), el::Error);
  el::DateWindow w(d1, d3);
  EXPECT_TRUE(w.contains(d1));
  EXPECT_TRUE(w.contains(d3));
  EXPECT_FALSE(w.contains(d4));
  EXPECT_FALSE(w.intersect({d4, d4}).has_value());
  EXPECT_EQ(*w.intersect({d3, d4}), el::DateWindow(d3, d3));
}

TEST(PanelCsv, Layout) {
  std::vector<el::RawSeries> s = {make_series("B", d1, {2, 3}), make_series("A", d1, {0.5, 1})};
  auto p = el::align(s, {el::BarField::close});
  EXPECT_EQ(el::panel_to_csv(p),
            "date,A.close,B.close\n"
            "2022-01-03,0.5,2\n"
            "2022-01-04,1,3\n");
}

TEST(Date, ParseStrict) {
  EXPECT_EQ(el::Date::parse("2022-02-01"), el::Date(2022, 2, 1));
  EXPECT_FALSE(el::Date::try_parse("2022/02/01"));
  EXPECT_FALSE(el::Date::try_parse("2022-02-30"));
  EXPECT_FALSE(el::Date::try_parse("2022-2-01"));
  EXPECT_FALSE(el::Date::try_parse(" 2022-02-01"));
  EXPECT_EQ(el::Date(2019, 5, 21).iso(), "2019-05-21");
}
