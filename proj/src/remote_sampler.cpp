#include "cyrisk/remote_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cyrisk/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cyrisk {

namespace {

struct Endpoint {
  std::string host;
  int port = 80;
  std::string path = "/";
};

Endpoint parse_endpoint(const std::string& url) {
  const std::string prefix = "http://";
  if (url.rfind(prefix, 0) != 0)
    throw RemoteError(RemoteError::Kind::network,
                      "sampler endpoint must start with http:// (got '" + url + "')");
  std::string rest = url.substr(prefix.size());
  Endpoint ep;
  std::size_t slash = rest.find('/');
  std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
  ep.path = slash == std::string::npos ? "/" : rest.substr(slash);
  std::size_t colon = hostport.find(':');
  if (colon == std::string::npos) {
    ep.host = hostport;
  } else {
    ep.host = hostport.substr(0, colon);
    try {
      ep.port = std::stoi(hostport.substr(colon + 1));
    } catch (...) {
      throw RemoteError(RemoteError::Kind::network, "bad port in endpoint '" + url + "'");
    }
  }
  if (ep.host.empty())
    throw RemoteError(RemoteError::Kind::network, "empty host in endpoint '" + url + "'");
  return ep;
}

bool energy_matches(double reported, double local) {
  double tol = 1e-9 * std::max({1.0, std::fabs(reported), std::fabs(local)});
  return std::fabs(reported - local) <= tol;
}

}  // namespace

RemoteSampleResult remote_sample(const QuboModel& fragment,
                                 const std::string& endpoint, double timeout_s) {
  Endpoint ep = parse_endpoint(endpoint);
  httplib::Client client(ep.host, ep.port);
  client.set_connection_timeout(std::chrono::milliseconds(
      static_cast<int>(timeout_s * 1000)));
  client.set_read_timeout(std::chrono::milliseconds(static_cast<int>(timeout_s * 1000)));

  auto res = client.Post(ep.path, export_qubo(fragment), "text/plain");
  if (!res)
    throw RemoteError(RemoteError::Kind::network,
                      "sampler unreachable at " + endpoint);
  if (res->status != 200)
    throw RemoteError(RemoteError::Kind::network,
                      "sampler returned HTTP " + std::to_string(res->status));

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw RemoteError(RemoteError::Kind::malformed,
                      std::string("sampler response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("samples") || !doc.contains("energies") ||
      !doc["samples"].is_array() || !doc["energies"].is_array() ||
      doc["samples"].size() != doc["energies"].size())
    throw RemoteError(RemoteError::Kind::malformed,
                      "sampler response must be {\"samples\":[[bits]],\"energies\":[...]}");

  RemoteSampleResult out;
  for (std::size_t i = 0; i < doc["samples"].size(); ++i) {
    const auto& js = doc["samples"][i];
    if (!js.is_array() || js.size() != fragment.n_vars())
      throw RemoteError(RemoteError::Kind::malformed,
                        "sample " + std::to_string(i) + " has wrong length");
    Assignment a(fragment.n_vars());
    for (std::size_t b = 0; b < js.size(); ++b) {
      int bit = js[b].get<int>();
      if (bit != 0 && bit != 1)
        throw RemoteError(RemoteError::Kind::malformed,
                          "sample " + std::to_string(i) + " has non-binary entry");
      a.bits[b] = static_cast<std::uint8_t>(bit);
    }
    double reported = doc["energies"][i].get<double>();
    double local = fragment.energy(a);
    if (!energy_matches(reported, local)) {
      ++out.discarded;  // untrusted sample: reported energy disagrees
      continue;
    }
    out.samples.push_back(std::move(a));
    out.energies.push_back(local);
  }

  // best first, stable for reproducibility
  std::vector<std::size_t> order(out.samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.energies[a] < out.energies[b];
  });
  RemoteSampleResult sorted;
  sorted.discarded = out.discarded;
  for (std::size_t idx : order) {
    sorted.samples.push_back(std::move(out.samples[idx]));
    sorted.energies.push_back(out.energies[idx]);
  }
  return sorted;
}

}  // namespace cyrisk
