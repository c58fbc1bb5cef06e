#include "tiq/nn/checkpoint.hpp"

#include "tiq/binary_io.hpp"

namespace tiq::nn {

void save_checkpoint(const std::string& path, const NetworkSpec& spec, const NetworkParams<float>& params) {
  const ParamLayout layout = make_layout(spec);
  if (params.values.size() != layout.parameter_count || params.state.size() != layout.state_count)
    throw std::invalid_argument("save_checkpoint: parameters do not match the network description");
  ByteWriter w;
  w.bytes("TIQW", 4);
  w.u64(spec.fingerprint());
  w.u32(static_cast<std::uint32_t>(layout.slots.size()));
  for (const LayerSlots& s : layout.slots) {
    w.u64(s.weight);
    w.u64(s.bias);
    w.u64(s.state);
  }
  w.u64(layout.parameter_count);
  w.u64(layout.state_count);
  for (float v : params.values) w.f32(v);
  for (float v : params.state) w.f32(v);
  w.seal();
  write_file(path, w.buffer());
}

NetworkParams<float> load_checkpoint(const std::string& path, const NetworkSpec& spec) {
  const std::vector<std::uint8_t> file = read_file(path);
  ByteReader magic(file);
  magic.expect_magic("TIQW");
  ByteReader r(verify_sealed(file));
  r.expect_magic("TIQW");
  if (r.u64() != spec.fingerprint()) throw FormatError("checkpoint was written for a different network spec");
  const ParamLayout layout = make_layout(spec);
  if (r.u32() != layout.slots.size()) throw FormatError("checkpoint layer count mismatch");
  for (const LayerSlots& s : layout.slots)
    if (r.u64() != s.weight || r.u64() != s.bias || r.u64() != s.state) throw FormatError("checkpoint offset mismatch");
  if (r.u64() != layout.parameter_count || r.u64() != layout.state_count) throw FormatError("checkpoint size mismatch");
  if (r.remaining() != 4 * (layout.parameter_count + layout.state_count)) throw FormatError("checkpoint length mismatch");
  NetworkParams<float> params{std::vector<float>(layout.parameter_count), std::vector<float>(layout.state_count)};
  for (float& v : params.values) v = r.f32();
  for (float& v : params.state) v = r.f32();
  return params;
}

}  // namespace tiq::nn
