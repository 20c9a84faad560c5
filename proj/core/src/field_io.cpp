#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "symphodge/grid.hpp"

namespace symphodge {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff), static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_field(const FormField& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_field: cannot open " + path);
  os.write("SYHF", 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(f.grid->n()));
  put_u32(os, static_cast<std::uint32_t>(f.degree));
  for (int s : f.grid->shape()) put_u32(os, static_cast<std::uint32_t>(s));
  put_u32(os, static_cast<std::uint32_t>(f.grid->stencil_order()));
  unsigned char pf = f.primitive_flag ? 1 : 0;
  os.write(reinterpret_cast<const char*>(&pf), 1);
  for (long i = 0; i < f.values.size(); ++i) put_f64(os, f.values[i]);
}

FormField load_field(const std::string& path, std::shared_ptr<const Grid> grid,
                     std::shared_ptr<const SymplecticModel> model) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_field: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::string(magic, 4) != "SYHF") throw std::runtime_error("load_field: bad magic");
  if (get_u32(is) != kVersion) throw std::runtime_error("load_field: unsupported version");
  std::uint32_t n = get_u32(is);
  std::uint32_t degree = get_u32(is);
  if (static_cast<int>(n) != grid->n()) throw std::runtime_error("load_field: n mismatch");
  std::vector<int> shape(2 * n);
  for (auto& s : shape) s = static_cast<int>(get_u32(is));
  if (shape != grid->shape()) throw std::runtime_error("load_field: shape mismatch");
  std::uint32_t order = get_u32(is);
  if (static_cast<int>(order) != grid->stencil_order()) throw std::runtime_error("load_field: order mismatch");
  unsigned char pf;
  is.read(reinterpret_cast<char*>(&pf), 1);
  FormField f(grid, model, static_cast<int>(degree));
  f.primitive_flag = pf != 0;
  for (long i = 0; i < f.values.size(); ++i) f.values[i] = get_f64(is);
  if (!is) throw std::runtime_error("load_field: truncated file");
  return f;
}

void export_trace_csv(const BoundaryTrace& t, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_trace_csv: cannot open " + path);
  os << "face,face_node";
  for (int c = 0; c < t.values.cols(); ++c) os << ",c" << c;
  os << "\n";
  os.precision(17);
  for (int i = 0; i < t.values.rows(); ++i) {
    os << t.face << "," << i;
    for (int c = 0; c < t.values.cols(); ++c) os << "," << t.values(i, c);
    os << "\n";
  }
}

}  // namespace symphodge
