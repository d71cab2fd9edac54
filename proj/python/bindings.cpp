#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stlod/analysis.hpp"
#include "stlod/experiments.hpp"
#include "stlod/solver.hpp"

namespace py = pybind11;
using namespace stlod;

namespace {

Eigen::MatrixXd stack_slices(const SpaceTimeFunction& f) {
  Eigen::MatrixXd out(f.slices.size(), f.slices.empty() ? 0 : f.slices[0].size());
  for (size_t g = 0; g < f.slices.size(); ++g) out.row(g) = f.slices[g].transpose();
  return out;
}

SpaceTimeFunction unstack_slices(const Eigen::MatrixXd& rows, const TemporalGrid& grid) {
  if (rows.rows() != grid.total_fine_steps() + 1)
    throw invalid_argument("expected one row per fine time node");
  SpaceTimeFunction f;
  for (int g = 0; g < rows.rows(); ++g) f.slices.push_back(rows.row(g).transpose());
  return f;
}

RhsFunction make_rhs(const py::object& source, const SpatialMesh& fine) {
  RhsFunction f;
  if (py::isinstance<py::float_>(source) || py::isinstance<py::int_>(source)) {
    f.time_poly = {source.cast<double>(), 0.0, 0.0};
  } else if (py::isinstance<py::function>(source)) {
    auto fn = source.cast<std::function<double(double, double, double)>>();
    f.analytic = fn;
  } else {
    f.nodal = source.cast<Eigen::VectorXd>();
    if (f.nodal.size() != fine.node_count())
      throw invalid_argument("nodal source must cover every fine node");
  }
  return f;
}

}  // namespace

PYBIND11_MODULE(_stlod, m) {
  m.doc() = "localized space-time multiscale solver core";

  py::register_exception<invalid_argument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<numerical_failure>(m, "NumericalFailure", PyExc_RuntimeError);
  py::register_exception<io_error>(m, "IoError", PyExc_IOError);

  py::class_<SpatialMesh>(m, "SpatialMesh")
      .def_readonly("mesh_size", &SpatialMesh::mesh_size)
      .def_readonly("spacing", &SpatialMesh::spacing)
      .def_property_readonly("node_count", &SpatialMesh::node_count)
      .def_property_readonly("element_count", &SpatialMesh::element_count)
      .def_property_readonly("interior_count", &SpatialMesh::interior_count)
      .def("nodes",
           [](const SpatialMesh& mesh) {
             Eigen::MatrixXd out(mesh.node_count(), 2);
             for (int v = 0; v < mesh.node_count(); ++v) {
               out(v, 0) = mesh.nodes[v][0];
               out(v, 1) = mesh.nodes[v][1];
             }
             return out;
           })
      .def("elements", [](const SpatialMesh& mesh) {
        Eigen::MatrixXi out(mesh.element_count(), 3);
        for (int e = 0; e < mesh.element_count(); ++e)
          for (int v = 0; v < 3; ++v) out(e, v) = mesh.elements[e][v];
        return out;
      });

  py::class_<SpatialMeshPair>(m, "SpatialMeshPair")
      .def_readonly("coarse", &SpatialMeshPair::coarse)
      .def_readonly("fine", &SpatialMeshPair::fine)
      .def_readonly("refinement_levels", &SpatialMeshPair::refinement_levels);

  py::class_<TemporalGrid>(m, "TemporalGrid")
      .def_readonly("t_final", &TemporalGrid::t_final)
      .def_readonly("coarse_steps", &TemporalGrid::coarse_steps)
      .def_readonly("fine_per_coarse", &TemporalGrid::fine_per_coarse)
      .def_readonly("coarse_step", &TemporalGrid::coarse_step)
      .def_readonly("fine_step", &TemporalGrid::fine_step);

  py::class_<Patch>(m, "Patch")
      .def_readonly("center_element", &Patch::center_element)
      .def_readonly("radius", &Patch::radius)
      .def_readonly("saturated", &Patch::saturated)
      .def_readonly("coarse_elements", &Patch::coarse_elements)
      .def_readonly("fine_nodes_active", &Patch::fine_nodes_active)
      .def_readonly("coarse_nodes_active", &Patch::coarse_nodes_active);

  py::class_<Coefficient>(m, "Coefficient")
      .def_readonly("eps_x", &Coefficient::eps_x)
      .def_readonly("eps_t", &Coefficient::eps_t)
      .def_readonly("time_periodic", &Coefficient::time_periodic)
      .def_readonly("alpha", &Coefficient::alpha)
      .def_readonly("beta", &Coefficient::beta)
      .def_readonly("values", &Coefficient::values)
      .def("value_on", [](const Coefficient& c, double x, double y, double t) {
        return value_on(c, {x, y}, t);
      })
      .def("fingerprint", &Coefficient::fingerprint);

  py::class_<InterpolationOperator>(m, "InterpolationOperator")
      .def("apply", [](const InterpolationOperator& op,
                       const Eigen::VectorXd& v) { return apply(op, v); })
      .def("apply_transpose",
           [](const InterpolationOperator& op, const Eigen::VectorXd& v) {
             return apply_transpose(op, v);
           })
      .def("prolong", [](const InterpolationOperator& op, const Eigen::VectorXd& v) {
        return Eigen::VectorXd(op.prolongation * v);
      });

  py::class_<CorrectorOperator>(m, "CorrectorOperator")
      .def_readonly("k", &CorrectorOperator::k)
      .def_readonly("ell", &CorrectorOperator::ell)
      .def_readonly("reuse_time_shift", &CorrectorOperator::reuse_time_shift)
      .def_readwrite("zero_debug", &CorrectorOperator::zero_debug)
      .def_property_readonly("stored_blocks",
                             [](const CorrectorOperator& op) { return op.blocks.size(); })
      .def("max_constraint_residual", &CorrectorOperator::max_constraint_residual);

  py::class_<CoarseSystem>(m, "CoarseSystem")
      .def_readonly("ell", &CoarseSystem::ell)
      .def_readonly("periodic_blocks", &CoarseSystem::periodic_blocks);

  py::class_<NormContext>(m, "NormContext");

  m.def("build_uniform_mesh", &build_uniform_mesh, py::arg("subdivision_exponent"));
  m.def("build_mesh_pair", &build_mesh_pair, py::arg("coarse_exponent"),
        py::arg("fine_exponent"));
  m.def("build_temporal_grid", &build_temporal_grid, py::arg("t_final"),
        py::arg("coarse_steps"), py::arg("fine_per_coarse"));
  m.def("make_patch", &make_patch, py::arg("pair"), py::arg("center_element"),
        py::arg("radius"));
  m.def("saturating_radius", &saturating_radius);

  m.def("generate_random_coefficient", &generate_random_coefficient, py::arg("seed"),
        py::arg("eps_x"), py::arg("eps_t"), py::arg("low"), py::arg("high"),
        py::arg("periodic"), py::arg("period"));
  m.def("save_coefficient", &save_coefficient);
  m.def("load_coefficient", &load_coefficient);

  m.def("build_quasi_interpolation", &build_quasi_interpolation);

  m.def("assemble_corrector_operator", &assemble_corrector_operator, py::arg("pair"),
        py::arg("grid"), py::arg("coeff"), py::arg("k"), py::arg("ell"),
        py::arg("worker_count") = 1, py::arg("reuse_time_shift") = true);
  m.def("save_corrector_cache", &save_corrector_cache);
  m.def("load_corrector_cache", &load_corrector_cache);

  m.def("assemble_coarse_system", &assemble_coarse_system);

  m.def("solve_multiscale",
        [](const CoarseSystem& sys, const SpatialMeshPair& pair, const TemporalGrid& grid,
           const InterpolationOperator& interp, const py::object& source) {
          const LoadAssembler loads(pair.fine, grid);
          const RhsFunction f = make_rhs(source, pair.fine);
          const auto rhs = assemble_coarse_rhs(f, loads, interp, grid);
          return solve_multiscale(sys, rhs).coarse;
        },
        py::arg("system"), py::arg("pair"), py::arg("grid"), py::arg("interp"),
        py::arg("source"));

  m.def("reconstruct_fine",
        [](const Eigen::MatrixXd& coarse, const CorrectorOperator& op,
           const SpatialMeshPair& pair, const TemporalGrid& grid,
           const InterpolationOperator& interp) {
          return stack_slices(reconstruct_fine(coarse, op, pair, grid, interp));
        });

  m.def("apply_corrector",
        [](const CorrectorOperator& op, const SpatialMeshPair& pair, const TemporalGrid& grid,
           const Eigen::MatrixXd& coarse) {
          return stack_slices(apply_corrector(op, pair, grid, coarse));
        });

  m.def("solve_reference_fine",
        [](const SpatialMesh& fine, const TemporalGrid& grid, const Coefficient& coeff,
           const py::object& source) {
          return stack_slices(solve_reference_fine(fine, grid, coeff, make_rhs(source, fine)));
        },
        py::arg("fine"), py::arg("grid"), py::arg("coeff"), py::arg("source"));

  m.def("make_norm_context", &make_norm_context);
  m.def("trial_norm", [](const NormContext& ctx, const Eigen::MatrixXd& rows) {
    return trial_norm(ctx, unstack_slices(rows, ctx.grid));
  });
  m.def("l2h1_norm", [](const NormContext& ctx, const Eigen::MatrixXd& rows) {
    return l2h1_norm(ctx, unstack_slices(rows, ctx.grid));
  });
  m.def("hminus1_norm", &hminus1_norm);

  m.def("delta_estimator", &delta_estimator, py::arg("op"), py::arg("pair"), py::arg("grid"),
        py::arg("ctx"), py::arg("interp"), py::arg("element"), py::arg("interval"),
        py::arg("ell_used") = -1);
  m.def("theta_estimator", &theta_estimator, py::arg("op"), py::arg("pair"), py::arg("grid"),
        py::arg("ctx"), py::arg("interp"), py::arg("element"), py::arg("interval"),
        py::arg("ell_used") = -1);
}
