#include <gtest/gtest.h>

#include <filesystem>

#include "uavsched/error.hpp"
#include "uavsched/harness.hpp"
#include "uavsched/io.hpp"

using namespace uavsched;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(ConfigText, KeyValueLinesAndComments) {
  const auto kv = parse_config("# header\nepochs = 3\n\n  lr=0.5   # inline\nmode = sample:8\n");
  ASSERT_EQ(kv.size(), 3u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"epochs", "3"}));
  EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"lr", "0.5"}));
  EXPECT_EQ(kv[2].second, "sample:8");
  EXPECT_THROW(parse_config("epochs 3\n"), ArgumentError);
}

TEST(RunConfigTest, SetAndValidate) {
  RunConfig c;
  c.set("methods", "kmeans-vnd, random-greedy");
  c.set("vehicles", "4");
  c.set("tasks", "80");
  EXPECT_EQ(c.methods, std::vector<std::string>({"kmeans-vnd", "random-greedy"}));
  EXPECT_EQ(c.scenario_label(), "U4-80");
  EXPECT_NO_THROW(c.validate());
  c.set("methods", "ortools");
  EXPECT_THROW(c.validate(), ArgumentError);
  RunConfig d;
  d.set("mode", "beam:3");
  EXPECT_THROW(d.validate(), ArgumentError);
  EXPECT_THROW(d.set("tasks", "many"), ArgumentError);
  EXPECT_THROW(d.set("colour", "red"), ArgumentError);
  EXPECT_TRUE(is_learned("dl-drl"));
  EXPECT_FALSE(is_learned("kmeans-vnd"));
}

TEST(ResultTableTest, GapsFollowTheBestRow) {
  ResultTable t;
  t.scenario = "U2-20";
  t.test_size = 3;
  t.mode = "greedy";
  t.rows = {{"a", 10.0, 0, 0.1}, {"b", 12.5, 0, 0.2}, {"c", 5.0, 0, 0.3}};
  t.compute_gaps();
  EXPECT_EQ(t.rows[1].gap, 0.0);
  EXPECT_DOUBLE_EQ(t.rows[0].gap, 20.0);
  EXPECT_DOUBLE_EQ(t.rows[2].gap, 60.0);
  const std::string csv = t.to_csv(false);
  EXPECT_EQ(csv,
            "scenario,test_size,mode,method,obj,gap\n"
            "U2-20,3,greedy,a,10.000000,20.000000\n"
            "U2-20,3,greedy,b,12.500000,0.000000\n"
            "U2-20,3,greedy,c,5.000000,60.000000\n");
  EXPECT_NE(t.to_csv(true).find(",time_s\n"), std::string::npos);
  // A worse row leaves the others alone.
  t.rows.push_back({"d", 1.0, 0, 0});
  t.compute_gaps();
  EXPECT_DOUBLE_EQ(t.rows[0].gap, 20.0);
  EXPECT_EQ(t.rows[1].gap, 0.0);
}

TEST(Svg, OnePolylinePerVehicle) {
  const Instance inst = generate_instance(3, 15, 3, 1.0);
  const Solution s = solve_instance("kmeans-vnd", inst, nullptr, DecodeMode::greedy(), 1);
  const std::string svg = render_svg(inst, s);
  EXPECT_EQ(count_of(svg, "<svg "), 1u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(count_of(svg, "<polyline"), 3u);
  EXPECT_EQ(count_of(svg, "<circle"), 15u);
  const int served = objective(s);
  EXPECT_EQ(count_of(svg, "class=\"served\""), static_cast<std::size_t>(served));
  EXPECT_EQ(count_of(svg, "class=\"unserved\""), static_cast<std::size_t>(15 - served));
  EXPECT_EQ(count_of(svg, "class=\"depot\""), 1u);
}

TEST(Evaluate, ClassicalMethodsAreReproducibleAndJobInvariant) {
  RunConfig c;
  c.tasks = 12;
  c.vehicles = 2;
  c.test_size = 40;
  c.methods = {"kmeans-vnd", "kmeans-greedy", "random-greedy"};
  const auto inst = test_instances(c);
  ASSERT_EQ(inst.size(), 40u);
  const ResultTable a = evaluate(c, inst, nullptr);
  c.jobs = 3;
  const ResultTable b = evaluate(c, inst, nullptr);
  EXPECT_EQ(a.to_csv(false), b.to_csv(false));
  EXPECT_EQ(a.rows[0].gap, 0.0);  // vnd dominates greedy insertion on every instance
  EXPECT_GE(a.rows[0].obj, a.rows[1].obj);
  EXPECT_EQ(a.scenario, "U2-12");
}

TEST(Evaluate, LearnedMethodNeedsModels) {
  RunConfig c;
  c.tasks = 5;
  c.test_size = 2;
  c.methods = {"dl-drl"};
  const auto inst = test_instances(c);
  EXPECT_THROW(evaluate(c, inst, nullptr), ArgumentError);
}

TEST(Evaluate, DlDrlWithSmallModels) {
  UpperHyper uh;
  uh.d_h = 8;
  uh.heads = 2;
  uh.layers = 1;
  uh.ff_hidden = 16;
  uh.decoder_ff = 16;
  LowerHyper lh;
  lh.d_h = 8;
  lh.heads = 2;
  lh.layers = 1;
  lh.ff_hidden = 16;
  Models m{UpperModel(uh, 2, 1), LowerModel(lh, 2)};
  const Instance inst = generate_instance(4, 10, 2, 2.0);
  const Solution g = dl_drl(inst, m, DecodeMode::greedy());
  const Solution s = dl_drl(inst, m, DecodeMode::sample(16, 1));
  EXPECT_TRUE(validate_solution(g, inst).feasible);
  EXPECT_TRUE(validate_solution(s, inst).feasible);
  const Instance wrong = generate_instance(4, 10, 3, 2.0);
  EXPECT_THROW(dl_drl(wrong, m, DecodeMode::greedy()), ArgumentError);
}

TEST(Ablation, VariantNames) {
  const auto& v = ablation_variants();
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v[0].name, "ITS");
  EXPECT_TRUE(v[0].pretrain && v[0].intensive);
  EXPECT_EQ(v[1].name, "ITS/pre-training");
  EXPECT_FALSE(v[1].pretrain);
  EXPECT_EQ(v[2].name, "ITS/intensive");
  EXPECT_FALSE(v[2].intensive);
}
