#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "dynsleuth/policy.hpp"

using namespace dynsleuth;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("test_policy_io_") + name;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("policy files round-trip bit-exactly for every head kind") {
  RngStream rng(404);
  for (PolicyHead head : {PolicyHead::QValues, PolicyHead::Logits, PolicyHead::Gaussian}) {
    Policy p;
    p.head = head;
    p.input_contract = head == PolicyHead::Gaussian ? "pointbot3" : "lidar8";
    p.params = nn::mlp_init(head == PolicyHead::Gaussian ? std::vector<int>{3, 32, 32, 1}
                                                         : std::vector<int>{8, 64, 64, 5},
                            rng);
    if (head == PolicyHead::Gaussian) p.log_std = -0.731;

    const std::string path = temp_path(head_name(head)) + ".policy";
    save_policy(p, path);
    const Policy loaded = load_policy(path);
    CHECK(loaded == p);

    // Re-saving the loaded policy reproduces the file byte for byte.
    const std::string path2 = path + ".again";
    save_policy(loaded, path2);
    CHECK(file_bytes(path) == file_bytes(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
  }
}

TEST_CASE("loading a non-policy file fails cleanly") {
  const std::string path = temp_path("junk");
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a policy";
  }
  CHECK_THROWS_AS(load_policy(path), std::runtime_error);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_policy("does_not_exist.policy"), std::runtime_error);
}

TEST_CASE("action selection per head") {
  Policy p;
  p.params.dims = {2, 3};
  p.params.weights = {{1.0, 0.0, 0.0, 0.0, 1.0, 0.0}};
  p.params.biases = {{0.0, 0.0, 0.0}};
  p.input_contract = "raw2";

  p.head = PolicyHead::QValues;
  CHECK(p.greedy_action({5.0, 1.0}) == 0);
  CHECK(p.greedy_action({1.0, 5.0}) == 1);
  // Tie between outputs 0 and 1 resolves to the lowest index.
  CHECK(p.greedy_action({2.0, 2.0}) == 0);
  const std::vector<double> onehot = p.action_distribution({5.0, 1.0});
  CHECK(onehot == std::vector<double>{1.0, 0.0, 0.0});

  p.head = PolicyHead::Logits;
  const std::vector<double> dist = p.action_distribution({1.0, 1.0});
  CHECK(dist[0] == doctest::Approx(dist[1]));
  double total = 0.0;
  for (double v : dist) total += v;
  CHECK(total == doctest::Approx(1.0));

  RngStream rng(7);
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 3000; ++i) counts[p.act({3.0, 0.0}, rng).discrete]++;
  CHECK(counts[0] > counts[1]);
  CHECK(counts[1] > 0);  // sampling, not argmax

  p.head = PolicyHead::Gaussian;
  CHECK_THROWS_AS(p.action_distribution({1.0, 1.0}), std::invalid_argument);
}
