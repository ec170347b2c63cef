#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "refverify/analysis.hpp"
#include "refverify/backends.hpp"
#include "refverify/curves.hpp"
#include "refverify/geometry.hpp"
#include "refverify/image_io.hpp"
#include "refverify/pipeline.hpp"
#include "refverify/render.hpp"

namespace py = pybind11;
using namespace refverify;

namespace {

Rgb rgb_from_tuple(const std::tuple<int, int, int>& t) {
  return {static_cast<uint8_t>(std::get<0>(t)), static_cast<uint8_t>(std::get<1>(t)),
          static_cast<uint8_t>(std::get<2>(t))};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Verification-first referring-expression grounding: geometry, overlay "
            "rendering, decision rule, and the two-candidate accuracy model.";

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<double, double, double, double>(), py::arg("x_min"), py::arg("y_min"),
           py::arg("x_max"), py::arg("y_max"))
      .def_static("from_xywh", &BoundingBox::from_xywh, py::arg("x"), py::arg("y"), py::arg("w"),
                  py::arg("h"))
      .def_readonly("x_min", &BoundingBox::x_min)
      .def_readonly("y_min", &BoundingBox::y_min)
      .def_readonly("x_max", &BoundingBox::x_max)
      .def_readonly("y_max", &BoundingBox::y_max)
      .def("area", &BoundingBox::area)
      .def("__eq__", [](const BoundingBox& a, const BoundingBox& b) { return a == b; })
      .def("__repr__", [](const BoundingBox& b) {
        std::ostringstream out;
        out << "BoundingBox(" << b.x_min << ", " << b.y_min << ", " << b.x_max << ", " << b.y_max
            << ")";
        return out.str();
      });

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def(
      "is_hit",
      [](const BoundingBox& pred, const BoundingBox& gt, double threshold) {
        return is_hit(pred, gt, MatchThreshold(threshold));
      },
      py::arg("pred"), py::arg("gt"), py::arg("threshold") = 0.5);
  m.def(
      "acc_at",
      [](const std::vector<std::pair<std::optional<BoundingBox>, BoundingBox>>& items,
         double threshold) { return acc_at(items, MatchThreshold(threshold)); },
      py::arg("items"), py::arg("threshold") = 0.5,
      "Fraction of (prediction, ground_truth) pairs whose prediction exceeds the IoU "
      "threshold; None predictions are abstentions and count as misses.");

  m.def("a_sel", [](double p, double q1, double q2) { return a_sel({p, q1, q2}); }, py::arg("p"),
        py::arg("q1"), py::arg("q2"));
  m.def("a_ver", [](double p, double q1, double q2) { return a_ver({p, q1, q2}); }, py::arg("p"),
        py::arg("q1"), py::arg("q2"));
  m.def("p_threshold", &p_threshold, py::arg("q1"), py::arg("q2"));
  m.def("symmetric_gain", &symmetric_gain, py::arg("q"));
  m.def("majority_vote_acc", &majority_vote_acc, py::arg("q"));
  m.def(
      "mc_two_candidate",
      [](double p, double q1, double q2, uint64_t trials, uint64_t seed) {
        const McEstimate est = mc_two_candidate({p, q1, q2}, trials, seed);
        return py::make_tuple(est.accuracy, est.std_error);
      },
      py::arg("p"), py::arg("q1"), py::arg("q2"), py::arg("trials") = 200000,
      py::arg("seed") = 1, "Returns (empirical_accuracy, std_error).");
  m.def(
      "mc_multi_candidate",
      [](double p, double q1, double q2, int n_proposals, uint64_t trials, uint64_t seed) {
        const McEstimate est = mc_multi_candidate({p, q1, q2}, n_proposals, trials, seed);
        return py::make_tuple(est.accuracy, est.std_error);
      },
      py::arg("p"), py::arg("q1"), py::arg("q2"), py::arg("n_proposals"),
      py::arg("trials") = 200000, py::arg("seed") = 1);
  m.def(
      "gain_grid_argmax",
      [](double step) {
        const GridMax peak = gain_grid_argmax(step);
        return py::make_tuple(peak.argmax, peak.max);
      },
      py::arg("step") = 1e-4);
  m.def(
      "emit_curves",
      [](const std::string& kind, double grid_step, const std::vector<double>& q2_values) {
        py::list out;
        for (const auto& s : emit_curves(curve_kind_from_name(kind), grid_step, q2_values))
          out.append(py::make_tuple(s.series, s.x, s.y));
        return out;
      },
      py::arg("kind"), py::arg("grid_step") = 0.001,
      py::arg("q2_values") = std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.45});

  m.def(
      "parse_truefalse",
      [](const std::string& reply) -> py::object {
        const auto v = parse_truefalse(reply);
        return v ? py::cast(*v) : py::none();
      },
      py::arg("reply"), "True/False verdict, or None when unparsable.");
  m.def(
      "parse_index",
      [](const std::string& reply, int n) -> py::object {
        const IndexReply r = parse_index(reply, n);
        if (r.kind == IndexReply::Kind::Index) return py::cast(r.index);
        if (r.kind == IndexReply::Kind::None) return py::cast(std::string("none"));
        return py::none();
      },
      py::arg("reply"), py::arg("n"),
      "0-based index, the string 'none', or None when unparsable.");
  m.def(
      "decide",
      [](const std::vector<bool>& verdict_values) {
        std::vector<Verdict> verdicts;
        for (size_t i = 0; i < verdict_values.size(); ++i)
          verdicts.push_back({verdict_values[i], "", static_cast<int>(i)});
        const Decision d = decide(verdicts);
        switch (d.kind) {
          case Decision::Kind::UniqueTrue:
            return py::make_tuple("unique_true", d.unique_index);
          case Decision::Kind::NeedTieBreak:
            return py::make_tuple("tie_break", d.true_set);
          default:
            return py::make_tuple("fallback", py::none());
        }
      },
      py::arg("verdicts"),
      "Classify a True/False pattern: ('unique_true', i), ('tie_break', true_set) or "
      "('fallback', None).");

  py::class_<OverlayStyle>(m, "OverlayStyle")
      .def(py::init([](std::tuple<int, int, int> stroke_color, int stroke_width,
                       int label_text_height, std::tuple<int, int, int> label_background) {
             OverlayStyle s;
             s.stroke_color = rgb_from_tuple(stroke_color);
             s.stroke_width = stroke_width;
             s.label_text_height = label_text_height;
             s.label_background = rgb_from_tuple(label_background);
             return s;
           }),
           py::arg("stroke_color") = std::make_tuple(255, 0, 0), py::arg("stroke_width") = 3,
           py::arg("label_text_height") = 16,
           py::arg("label_background") = std::make_tuple(0, 0, 0));

  py::class_<RasterImage>(m, "RasterImage")
      .def(py::init([](int width, int height, std::tuple<int, int, int> fill) {
             return RasterImage(width, height, rgb_from_tuple(fill));
           }),
           py::arg("width"), py::arg("height"), py::arg("fill") = std::make_tuple(0, 0, 0))
      .def_property_readonly("width", &RasterImage::width)
      .def_property_readonly("height", &RasterImage::height)
      .def("digest", &RasterImage::digest)
      .def("pixel",
           [](const RasterImage& img, int x, int y) {
             const Rgb c = img.at(x, y);
             return py::make_tuple(c[0], c[1], c[2]);
           })
      .def("to_bytes", [](const RasterImage& img) {
        return py::bytes(reinterpret_cast<const char*>(img.pixels().data()),
                         img.pixels().size());
      });

  m.def("render_single_box", &render_single_box, py::arg("image"), py::arg("box"),
        py::arg("style") = OverlayStyle());
  m.def("render_indexed_boxes", &render_indexed_boxes, py::arg("image"), py::arg("boxes"),
        py::arg("style") = OverlayStyle());
  m.def("read_image", &read_image, py::arg("path"));
  m.def("write_png", &write_png, py::arg("path"), py::arg("image"));

  m.attr("__version__") = "0.1.0";
}
