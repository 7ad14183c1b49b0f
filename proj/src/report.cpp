#include "qunet/report.hpp"

namespace qunet {

nlohmann::json to_json(const StateVector& s) {
  nlohmann::json amps = nlohmann::json::array();
  for (const Complex& a : s.amplitudes()) amps.push_back({a.real(), a.imag()});
  return {{"dims", s.spec().dims()}, {"amplitudes", std::move(amps)}};
}

nlohmann::json to_json(const ResourceUsage& r) {
  return {{"shared_qudits", r.shared_qudits}, {"qudit_dim", r.qudit_dim}, {"xor_ancillas", r.xor_ancillas}};
}

nlohmann::json report_to_json(const ProtocolReport& report) {
  const ProtocolConfig& c = report.config;
  nlohmann::json j;
  j["protocol"] = std::string(to_string(c.kind));
  j["dims"] = c.dims;
  if (!c.recv_dims.empty()) j["recv_dims"] = c.recv_dims;
  if (c.seed) j["seed"] = *c.seed;
  j["mode"] = to_string(c.mode);
  j["phase_convention"] = gates::to_string(c.convention);
  nlohmann::json inputs = nlohmann::json::array();
  for (const StateVector& s : c.inputs) inputs.push_back(to_json(s));
  j["inputs"] = std::move(inputs);
  j["resources"] = to_json(report.resources);
  nlohmann::json receivers = nlohmann::json::array();
  for (std::size_t i = 0; i < report.receivers.size(); ++i) {
    receivers.push_back({{"party", to_json(report.receivers[i])}, {"leg", report.receiver_legs[i]}});
  }
  j["receivers"] = std::move(receivers);
  j["measurement_count"] = report.measurement_count;
  nlohmann::json branches = nlohmann::json::array();
  for (const BranchRecord& b : report.branches) {
    nlohmann::json r = {{"outcome", b.outcome},
                        {"probability", b.probability},
                        {"fidelity", b.fidelity},
                        {"receiver_fidelities", b.receiver_fidelities}};
    if (b.final_state) r["final_state"] = to_json(*b.final_state);
    branches.push_back(std::move(r));
  }
  j["branches"] = std::move(branches);
  j["transcript"] = to_json(report.transcript);
  j["min_fidelity"] = report.min_fidelity;
  j["probability_sum"] = report.probability_sum;
  j["branch_count"] = report.branches.size();
  return j;
}

std::string report_to_string(const ProtocolReport& report) { return report_to_json(report).dump(2) + "\n"; }

}  // namespace qunet
