#include "cumolos/field_io.hpp"

#include <hdf5.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "cumolos/errors.hpp"

namespace cumolos {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'M', 'L', 'S'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_f32(std::ostream& os, float v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
float read_f32(std::istream& is) {
  float v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_matrix_f32(std::ostream& os, const Matrix& m) {
  std::vector<float> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row[static_cast<std::size_t>(j)] = static_cast<float>(m(i, j));
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

Matrix read_matrix_f32(std::istream& is, Eigen::Index rows,
                       Eigen::Index cols) {
  Matrix m(rows, cols);
  std::vector<float> row(static_cast<std::size_t>(cols));
  for (Eigen::Index i = 0; i < rows; ++i) {
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = static_cast<double>(row[static_cast<std::size_t>(j)]);
  }
  return m;
}

struct CmlsHeader {
  std::uint32_t rows = 0, cols = 0;
  float time_step_s = 0, gate_spacing_m = 0;
};

void write_cmls(const Matrix& a, const Matrix& b, double dt, double dg,
                const std::filesystem::path& path) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("cmls: record shapes differ");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cmls: cannot open for writing: " + path.string());
  os.write(kMagic.data(), kMagic.size());
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(a.rows()));
  write_u32(os, static_cast<std::uint32_t>(a.cols()));
  write_f32(os, static_cast<float>(dt));
  write_f32(os, static_cast<float>(dg));
  write_matrix_f32(os, a);
  write_matrix_f32(os, b);
  if (!os) throw IoError("cmls: write failed: " + path.string());
}

CmlsHeader read_cmls_header(std::istream& is, const std::string& what) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic)
    throw IoError("cmls: bad magic in " + what);
  const std::uint32_t version = read_u32(is);
  if (version != kVersion)
    throw IoError("cmls: unsupported version in " + what);
  CmlsHeader h;
  h.rows = read_u32(is);
  h.cols = read_u32(is);
  h.time_step_s = read_f32(is);
  h.gate_spacing_m = read_f32(is);
  if (!is) throw IoError("cmls: truncated header in " + what);
  if (h.rows == 0 || h.cols == 0)
    throw ShapeError("cmls: zero-sized field in " + what);
  return h;
}

std::pair<Matrix, Matrix> read_cmls_pair(const std::filesystem::path& path,
                                         CmlsHeader* header_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cmls: cannot open: " + path.string());
  const CmlsHeader h = read_cmls_header(is, path.string());
  Matrix a = read_matrix_f32(is, h.rows, h.cols);
  Matrix b = read_matrix_f32(is, h.rows, h.cols);
  if (!is) throw IoError("cmls: truncated data in " + path.string());
  if (header_out) *header_out = h;
  return {std::move(a), std::move(b)};
}

// ---- HDF5 ------------------------------------------------------------------

struct H5Id {
  hid_t id = H5I_INVALID_HID;
  herr_t (*closer)(hid_t) = nullptr;
  H5Id(hid_t i, herr_t (*c)(hid_t)) : id(i), closer(c) {}
  ~H5Id() {
    if (id >= 0 && closer) closer(id);
  }
  H5Id(const H5Id&) = delete;
  H5Id& operator=(const H5Id&) = delete;
  operator hid_t() const { return id; }
};

Matrix read_h5_matrix(hid_t file, const std::string& name,
                      const std::filesystem::path& path) {
  if (H5Lexists(file, name.c_str(), H5P_DEFAULT) <= 0)
    throw NamedVariableError("load_field: variable '" + name +
                             "' not found in " + path.string());
  H5Id dset(H5Dopen2(file, name.c_str(), H5P_DEFAULT), H5Dclose);
  if (dset < 0)
    throw IoError("load_field: cannot open dataset '" + name + "'");
  H5Id space(H5Dget_space(dset), H5Sclose);
  const int rank = H5Sget_simple_extent_ndims(space);
  if (rank != 2)
    throw ShapeError("load_field: variable '" + name + "' has rank " +
                     std::to_string(rank) + ", expected 2");
  hsize_t dims[2] = {0, 0};
  H5Sget_simple_extent_dims(space, dims, nullptr);
  std::vector<double> buf(static_cast<std::size_t>(dims[0] * dims[1]));
  if (H5Dread(dset, H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL, H5P_DEFAULT,
              buf.data()) < 0)
    throw IoError("load_field: read failed for '" + name + "'");
  Matrix m(static_cast<Eigen::Index>(dims[0]),
           static_cast<Eigen::Index>(dims[1]));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = buf[static_cast<std::size_t>(i) * dims[1] +
                    static_cast<std::size_t>(j)];
  return m;
}

bool read_h5_scalar_attr(hid_t file, const char* name, double* out) {
  if (H5Aexists(file, name) <= 0) return false;
  H5Id attr(H5Aopen(file, name, H5P_DEFAULT), H5Aclose);
  if (attr < 0) return false;
  return H5Aread(attr, H5T_NATIVE_DOUBLE, out) >= 0;
}

TimeHeightField load_field_hdf5(const std::filesystem::path& path,
                                const VariableNames& names) {
  H5Id file(H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
  if (file < 0) throw IoError("load_field: cannot open " + path.string());

  TimeHeightField f;
  f.velocity = read_h5_matrix(file, names.velocity, path);
  f.intensity = read_h5_matrix(file, names.intensity, path);
  if (f.velocity.rows() != f.intensity.rows() ||
      f.velocity.cols() != f.intensity.cols())
    throw ShapeError("load_field: velocity and intensity shapes differ");

  // The time coordinate fixes the sampling interval; the spectral metrics
  // depend on it, so its absence is an error unless a scalar attribute
  // supplies the step directly.
  if (H5Lexists(file, names.time.c_str(), H5P_DEFAULT) > 0) {
    H5Id dset(H5Dopen2(file, names.time.c_str(), H5P_DEFAULT), H5Dclose);
    H5Id space(H5Dget_space(dset), H5Sclose);
    if (H5Sget_simple_extent_ndims(space) != 1)
      throw ShapeError("load_field: time coordinate must be 1-D");
    hsize_t n = 0;
    H5Sget_simple_extent_dims(space, &n, nullptr);
    if (static_cast<Eigen::Index>(n) != f.velocity.rows())
      throw ShapeError("load_field: time coordinate length != T");
    std::vector<double> t(n);
    if (H5Dread(dset, H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL, H5P_DEFAULT,
                t.data()) < 0)
      throw IoError("load_field: cannot read time coordinate");
    f.start_time = t.front();
    if (n >= 2)
      f.time_step_s = (t.back() - t.front()) / static_cast<double>(n - 1);
    if (f.time_step_s <= 0)
      throw MetadataError("load_field: non-increasing time coordinate");
  } else if (double dt = 0; read_h5_scalar_attr(file, "time_step_s", &dt)) {
    if (dt <= 0) throw MetadataError("load_field: time_step_s attribute <= 0");
    f.time_step_s = dt;
  } else {
    throw MetadataError("load_field: no '" + names.time +
                        "' coordinate or time_step_s attribute in " +
                        path.string());
  }

  double dg = 0;
  if (read_h5_scalar_attr(file, "gate_spacing_m", &dg) && dg > 0)
    f.gate_spacing_m = dg;
  double st = 0;
  if (read_h5_scalar_attr(file, "start_time", &st)) f.start_time = st;
  return f;
}

void write_h5_matrix(hid_t file, const std::string& name, const Matrix& m) {
  hsize_t dims[2] = {static_cast<hsize_t>(m.rows()),
                     static_cast<hsize_t>(m.cols())};
  H5Id space(H5Screate_simple(2, dims, nullptr), H5Sclose);
  H5Id dcpl(H5Pcreate(H5P_DATASET_CREATE), H5Pclose);
  H5Pset_obj_track_times(dcpl, false);  // keep files byte-stable across runs
  H5Id dset(H5Dcreate2(file, name.c_str(), H5T_IEEE_F64LE, space, H5P_DEFAULT,
                       dcpl, H5P_DEFAULT),
            H5Dclose);
  if (dset < 0) throw IoError("save_field: cannot create dataset " + name);
  std::vector<double> buf(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      buf[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  if (H5Dwrite(dset, H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL, H5P_DEFAULT,
               buf.data()) < 0)
    throw IoError("save_field: write failed for " + name);
}

void write_h5_scalar_attr(hid_t file, const char* name, double value) {
  H5Id space(H5Screate(H5S_SCALAR), H5Sclose);
  H5Id attr(H5Acreate2(file, name, H5T_IEEE_F64LE, space, H5P_DEFAULT,
                       H5P_DEFAULT),
            H5Aclose);
  H5Awrite(attr, H5T_NATIVE_DOUBLE, &value);
}

}  // namespace

TimeHeightField load_field(const std::filesystem::path& path,
                           const VariableNames& names) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("load_field: cannot open " + path.string());
  std::array<char, 8> head{};
  probe.read(head.data(), head.size());
  if (probe.gcount() >= 4 && std::memcmp(head.data(), kMagic.data(), 4) == 0) {
    probe.close();
    CmlsHeader h;
    auto [vel, inten] = read_cmls_pair(path, &h);
    TimeHeightField f;
    f.velocity = std::move(vel);
    f.intensity = std::move(inten);
    f.time_step_s = h.time_step_s;
    f.gate_spacing_m = h.gate_spacing_m;
    return f;
  }
  static const unsigned char kH5Sig[8] = {0x89, 'H', 'D', 'F',
                                          '\r', '\n', 0x1a, '\n'};
  if (probe.gcount() == 8 && std::memcmp(head.data(), kH5Sig, 8) == 0) {
    probe.close();
    return load_field_hdf5(path, names);
  }
  throw IoError("load_field: unrecognized file format: " + path.string());
}

void save_field_cmls(const TimeHeightField& field,
                     const std::filesystem::path& path) {
  write_cmls(field.velocity, field.intensity, field.time_step_s,
             field.gate_spacing_m, path);
}

void save_field_hdf5(const TimeHeightField& field,
                     const std::filesystem::path& path,
                     const VariableNames& names) {
  H5Id fcpl(H5Pcreate(H5P_FILE_CREATE), H5Pclose);
  H5Id file(H5Fcreate(path.c_str(), H5F_ACC_TRUNC, fcpl, H5P_DEFAULT),
            H5Fclose);
  if (file < 0) throw IoError("save_field: cannot create " + path.string());

  write_h5_matrix(file, names.velocity, field.velocity);
  write_h5_matrix(file, names.intensity, field.intensity);

  const auto t = field.time_count();
  hsize_t dims = static_cast<hsize_t>(t);
  H5Id space(H5Screate_simple(1, &dims, nullptr), H5Sclose);
  H5Id dcpl(H5Pcreate(H5P_DATASET_CREATE), H5Pclose);
  H5Pset_obj_track_times(dcpl, false);
  H5Id dset(H5Dcreate2(file, names.time.c_str(), H5T_IEEE_F64LE, space,
                       H5P_DEFAULT, dcpl, H5P_DEFAULT),
            H5Dclose);
  std::vector<double> time(static_cast<std::size_t>(t));
  for (Eigen::Index i = 0; i < t; ++i)
    time[static_cast<std::size_t>(i)] =
        field.start_time + field.time_step_s * static_cast<double>(i);
  H5Dwrite(dset, H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL, H5P_DEFAULT,
           time.data());

  write_h5_scalar_attr(file, "gate_spacing_m", field.gate_spacing_m);
  write_h5_scalar_attr(file, "start_time", field.start_time);
}

void save_array_pair_cmls(const Matrix& first, const Matrix& second,
                          double time_step_s, double gate_spacing_m,
                          const std::filesystem::path& path) {
  write_cmls(first, second, time_step_s, gate_spacing_m, path);
}

std::pair<Matrix, Matrix> load_array_pair_cmls(
    const std::filesystem::path& path) {
  return read_cmls_pair(path, nullptr);
}

}  // namespace cumolos
