#include "dynsleuth/policy.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace dynsleuth {
namespace {

constexpr char kMagic[] = "DSPOLICY\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& v) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

const char* head_name(PolicyHead head) {
  switch (head) {
    case PolicyHead::QValues: return "qvalues";
    case PolicyHead::Logits: return "logits";
    case PolicyHead::Gaussian: return "gaussian";
  }
  throw std::logic_error("head_name: unknown head");
}

PolicyHead head_from_name(const std::string& name) {
  if (name == "qvalues") return PolicyHead::QValues;
  if (name == "logits") return PolicyHead::Logits;
  if (name == "gaussian") return PolicyHead::Gaussian;
  throw std::invalid_argument("unknown policy head '" + name + "'");
}

int argmax_lowest(const std::vector<double>& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<double> Policy::raw_output(const std::vector<double>& obs) const {
  return nn::forward(params, obs);
}

int Policy::greedy_action(const std::vector<double>& obs) const {
  return argmax_lowest(raw_output(obs));
}

std::vector<double> Policy::action_distribution(const std::vector<double>& obs) const {
  const std::vector<double> out = raw_output(obs);
  if (head == PolicyHead::Logits) return nn::softmax(out);
  if (head == PolicyHead::QValues) {
    std::vector<double> dist(out.size(), 0.0);
    dist[argmax_lowest(out)] = 1.0;
    return dist;
  }
  throw std::invalid_argument("action_distribution: Gaussian head has no discrete distribution");
}

PolicyAction Policy::act(const std::vector<double>& obs, RngStream& rng) const {
  PolicyAction action;
  switch (head) {
    case PolicyHead::QValues:
      action.discrete = greedy_action(obs);
      break;
    case PolicyHead::Logits: {
      const std::vector<double> p = nn::softmax(raw_output(obs));
      double u = rng.next_double();
      int chosen = static_cast<int>(p.size()) - 1;
      for (int i = 0; i < static_cast<int>(p.size()); ++i) {
        u -= p[i];
        if (u < 0.0) {
          chosen = i;
          break;
        }
      }
      action.discrete = chosen;
      break;
    }
    case PolicyHead::Gaussian:
      action.continuous = raw_output(obs)[0] + std::exp(log_std) * rng.normal();
      break;
  }
  return action;
}

void save_policy(const Policy& policy, const std::string& path) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["head"] = head_name(policy.head);
  header["layer_dims"] = policy.params.dims;
  header["input_contract"] = policy.input_contract;
  header["has_log_std"] = policy.head == PolicyHead::Gaussian;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_policy: cannot open " + path);
  out.write(kMagic, static_cast<std::streamsize>(kMagicLen));
  const std::uint32_t len = static_cast<std::uint32_t>(header_text.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (std::size_t l = 0; l < policy.params.weights.size(); ++l) {
    write_doubles(out, policy.params.weights[l]);
    write_doubles(out, policy.params.biases[l]);
  }
  if (policy.head == PolicyHead::Gaussian) {
    out.write(reinterpret_cast<const char*>(&policy.log_std), sizeof(double));
  }
  if (!out) throw std::runtime_error("save_policy: write failed for " + path);
}

Policy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_policy: cannot open " + path);
  char magic[kMagicLen];
  in.read(magic, static_cast<std::streamsize>(kMagicLen));
  if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0) {
    throw std::runtime_error("load_policy: " + path + " is not a policy file");
  }
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_text(len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("load_policy: truncated header in " + path);
  const nlohmann::json header = nlohmann::json::parse(header_text);
  if (header.at("format_version").get<int>() != 1) {
    throw std::runtime_error("load_policy: unsupported format version in " + path);
  }

  Policy policy;
  policy.head = head_from_name(header.at("head").get<std::string>());
  policy.input_contract = header.at("input_contract").get<std::string>();
  policy.params.dims = header.at("layer_dims").get<std::vector<int>>();
  if (policy.params.dims.size() < 2) throw std::runtime_error("load_policy: bad layer_dims");
  for (std::size_t l = 0; l + 1 < policy.params.dims.size(); ++l) {
    const std::size_t fan_in = static_cast<std::size_t>(policy.params.dims[l]);
    const std::size_t fan_out = static_cast<std::size_t>(policy.params.dims[l + 1]);
    std::vector<double> w(fan_in * fan_out), b(fan_out);
    read_doubles(in, w);
    read_doubles(in, b);
    policy.params.weights.push_back(std::move(w));
    policy.params.biases.push_back(std::move(b));
  }
  if (header.value("has_log_std", false)) {
    in.read(reinterpret_cast<char*>(&policy.log_std), sizeof(double));
  }
  if (!in) throw std::runtime_error("load_policy: truncated parameter blob in " + path);
  return policy;
}

}  // namespace dynsleuth
