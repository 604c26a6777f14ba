#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pseal/cli.hpp"
#include "pseal/codec.hpp"
#include "pseal/crypto.hpp"
#include "pseal/error.hpp"
#include "pseal/evalkit.hpp"
#include "pseal/handgeom.hpp"
#include "pseal/matching.hpp"
#include "pseal/pipeline.hpp"
#include "pseal/rs.hpp"

namespace py = pybind11;
using namespace pseal;

namespace {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(const py::bytes& b) {
  const std::string s = b;
  return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes& b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

imaging::GrayImage gray_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  return imaging::GrayImage::from_data(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

imaging::RgbImage rgb_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("expected an (h, w, 3) array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  imaging::RgbImage img(w, h);
  const double* p = a.data();
  for (auto& px : img.data()) {
    px = {p[0], p[1], p[2]};
    p += 3;
  }
  return img;
}

py::array_t<double> rgb_to_array(const imaging::RgbImage& img) {
  py::array_t<double> out({img.height(), img.width(), 3});
  double* p = out.mutable_data();
  for (const auto& px : img.data()) {
    *p++ = px.r;
    *p++ = px.g;
    *p++ = px.b;
  }
  return out;
}

py::array_t<std::uint8_t> bits_to_array(const imaging::BinaryMap& m) {
  py::array_t<std::uint8_t> out({m.height(), m.width()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

imaging::BinaryMap bits_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  imaging::BinaryMap m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

geometry::LandmarkSet landmarks_from(const std::vector<std::pair<double, double>>& pts, const std::string& schema) {
  geometry::LandmarkSet lm;
  lm.schema = geometry::parse_schema(schema);
  for (const auto& [x, y] : pts) lm.points.push_back({x, y});
  return lm;
}

}  // namespace

PYBIND11_MODULE(_passport_seal, m) {
  m.doc() = "Facial-mark detection, matching and sealed barcode payloads.";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&]() { return py::object(py::exception<Error>(m, "Error")); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object type = error_type.get_stored();
      py::object exc = type(e.what());
      exc.attr("code") = std::string(error_name(e.code()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  // -- crypto ---------------------------------------------------------------------

  m.def("sf_encrypt_block", [](std::uint64_t block, std::uint64_t key) {
    return crypto::sf_encrypt_block(block, crypto::sf_key_expand(key));
  });
  m.def("sf_decrypt_block", [](std::uint64_t block, std::uint64_t key) {
    return crypto::sf_decrypt_block(block, crypto::sf_key_expand(key));
  });
  m.def(
      "sf_encrypt",
      [](const py::bytes& data, std::uint64_t key, std::uint64_t iv) {
        return from_bytes(crypto::sf_encrypt_bytes(to_bytes(data), key, iv));
      },
      py::arg("data"), py::arg("key"), py::arg("iv") = 0);
  m.def("sf_decrypt", [](const py::bytes& data, std::uint64_t key) {
    return from_bytes(crypto::sf_decrypt_bytes(to_bytes(data), key));
  });
  m.def("sha256", [](const py::bytes& data) {
    const auto d = crypto::sha256(to_bytes(data));
    return from_bytes(Bytes(d.begin(), d.end()));
  });
  m.def(
      "hybrid_encrypt",
      [](const py::bytes& payload, const py::bytes& key, const py::bytes& iv) {
        const Bytes ivb = to_bytes(iv);
        if (ivb.size() != 16) throw py::value_error("iv must be 16 bytes");
        std::array<std::uint8_t, 16> iva{};
        std::copy(ivb.begin(), ivb.end(), iva.begin());
        return from_bytes(crypto::serialize_ciphertext(crypto::hybrid_encrypt(to_bytes(payload), to_bytes(key), iva)));
      },
      "Encrypts and returns the serialized container.");
  m.def("hybrid_decrypt", [](const py::bytes& container, const py::bytes& key) {
    return from_bytes(crypto::hybrid_decrypt(crypto::deserialize_ciphertext(to_bytes(container)), to_bytes(key)));
  });
  m.def("make_key_shares", [](const py::bytes& key, std::uint64_t seed) {
    const auto s = crypto::make_key_shares(to_bytes(key), seed);
    return py::make_tuple(bits_to_array(s.share_s), bits_to_array(s.share_t));
  });
  m.def("recover_key", [](const py::array_t<std::uint8_t>& s, const py::array_t<std::uint8_t>& t) {
    return from_bytes(crypto::recover_key(bits_from_array(s), bits_from_array(t)));
  });

  // -- codec ----------------------------------------------------------------------

  m.def("rs_encode", [](const py::bytes& data, int n_ec) { return from_bytes(rs::encode(to_bytes(data), n_ec)); },
        "Parity bytes for data.");
  m.def("rs_decode", [](const py::bytes& word, int n_ec) {
    const auto r = rs::decode(to_bytes(word), n_ec);
    return py::make_tuple(from_bytes(r.data), r.corrected);
  });

  py::class_<codec::SymbolMatrix>(m, "Symbol")
      .def_readonly("version", &codec::SymbolMatrix::version)
      .def_readonly("size", &codec::SymbolMatrix::size)
      .def_readonly("mask", &codec::SymbolMatrix::mask)
      .def_readonly("bits_per_module", &codec::SymbolMatrix::bits_per_module)
      .def_property_readonly("ec_level",
                             [](const codec::SymbolMatrix& s) { return std::string(1, codec::ec_level_char(s.ec_level)); })
      .def_property_readonly("modules",
                             [](const codec::SymbolMatrix& s) {
                               py::array_t<std::uint8_t> out({s.size, s.size});
                               std::copy(s.modules.begin(), s.modules.end(), out.mutable_data());
                               return out;
                             })
      .def("render", [](const codec::SymbolMatrix& s) { return rgb_to_array(codec::render(s)); },
           "One pixel per module with the quiet zone, RGB in [0, 1].")
      .def("__repr__", [](const codec::SymbolMatrix& s) { return "<Symbol " + codec::sidecar_line(s) + ">"; });

  m.def(
      "encode_symbol",
      [](const py::bytes& payload, int bits_per_module, int version, const std::string& ec, int mask) {
        return codec::hcc2d_encode(to_bytes(payload), bits_per_module, version, codec::parse_ec_level(ec), mask);
      },
      py::arg("payload"), py::arg("bits_per_module") = 1, py::arg("version") = 0, py::arg("ec") = "M",
      py::arg("mask") = -1);
  m.def("decode_symbol", [](const codec::SymbolMatrix& s) {
    return from_bytes(s.bits_per_module == 1 ? codec::qr_decode(s) : codec::hcc2d_decode(s));
  });
  m.def("decode_raster", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return from_bytes(a.ndim() == 2 ? codec::decode_raster(gray_from_array(a)) : codec::decode_raster(rgb_from_array(a)));
  });

  // -- marks and matching -----------------------------------------------------------

  py::class_<marks::FacialMark>(m, "FacialMark")
      .def_property_readonly("bbox",
                             [](const marks::FacialMark& f) { return py::make_tuple(f.bbox.x, f.bbox.y, f.bbox.w, f.bbox.h); })
      .def_property_readonly("center", [](const marks::FacialMark& f) { return py::make_tuple(f.center.x, f.center.y); })
      .def_readonly("area", &marks::FacialMark::area)
      .def_property_readonly("category",
                             [](const marks::FacialMark& f) { return std::string(marks::category_name(f.category)); })
      .def_readonly("intensity_hist", &marks::FacialMark::intensity_hist)
      .def_readonly("orient_hist", &marks::FacialMark::orient_hist);

  py::class_<marks::MarkSet>(m, "MarkSet")
      .def_readonly("marks", &marks::MarkSet::marks)
      .def("__len__", [](const marks::MarkSet& s) { return s.marks.size(); })
      .def("to_text", [](const marks::MarkSet& s) { return marks::format_mark_set(s); });

  m.def(
      "detect_face_marks",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& image,
         const std::vector<std::pair<double, double>>& landmarks, const std::string& schema,
         const std::string& config) {
        const auto cfg = pipeline::parse_config(config);
        pipeline::validate(cfg);
        const auto lm = landmarks_from(landmarks, schema);
        return pipeline::process_face(gray_from_array(image), lm, pipeline::mean_shape_for(cfg, lm.schema), cfg).marks;
      },
      py::arg("image"), py::arg("landmarks"), py::arg("schema") = "Face90", py::arg("config") = "",
      "Warps a face to the mean shape, masks it and returns the detected marks.");

  m.def(
      "fmm",
      [](const marks::MarkSet& gallery, const marks::MarkSet& probe, double region_halfwidth) {
        matching::MatchConfig cfg;
        cfg.region_halfwidth = region_halfwidth;
        return matching::fmm(gallery, probe, cfg).value;
      },
      py::arg("gallery"), py::arg("probe"), py::arg("region_halfwidth") = 0.05);

  m.def(
      "hand_features",
      [](const std::vector<std::pair<double, double>>& pts) {
        return handgeom::hand_features(handgeom::from_landmarks(landmarks_from(pts, "Hand16")));
      },
      "Fourteen rigid-invariant measurements from sixteen hand landmarks.");

  // -- evaluation ----------------------------------------------------------------------

  m.def(
      "roc",
      [](std::vector<double> genuine, std::vector<double> impostor, std::vector<double> far_targets) {
        const auto r = evalkit::roc({std::move(genuine), std::move(impostor)}, far_targets);
        py::list points;
        for (const auto& p : r.points) points.append(py::make_tuple(p.threshold, p.far, p.frr));
        py::dict out;
        out["eer"] = r.eer;
        out["points"] = points;
        out["frr_at_far"] = r.frr_at_far;
        return out;
      },
      py::arg("genuine"), py::arg("impostor"), py::arg("far_targets") = std::vector<double>{0.001});
  m.def(
      "cmc",
      [](const std::vector<std::pair<std::string, std::vector<std::string>>>& trials, int max_rank) {
        std::vector<evalkit::IdentificationTrial> t;
        for (const auto& [id, ranked] : trials) t.push_back({id, ranked});
        return evalkit::cmc(t, max_rank);
      },
      py::arg("trials"), py::arg("max_rank") = 10);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
