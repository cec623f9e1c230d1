#include "tcglab/experiments.hpp"
#include "tcglab/polylab.hpp"
#include "tcglab/problems.hpp"
#include "tcglab/tcg.hpp"
#include "tcglab/tr_driver.hpp"
#include "tcglab/trs_exact.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace tcglab;

namespace
{
TcgParams make_tcg_params(double kappa, double theta, const std::string& mode, int max_iterations)
{
    TcgParams p;
    p.kappa          = kappa;
    p.theta          = theta;
    p.max_iterations = max_iterations;
    if (mode == "plain")
        p.mode = TcgMode::plain;
    else if (mode != "truncated")
        throw std::invalid_argument("mode must be 'truncated' or 'plain'");
    p.validate();
    return p;
}

py::dict trace_dict(const TcgTrace& tr)
{
    std::vector< double > v_norm, r_norm, curvature;
    std::vector< bool >   well_defined;
    for (const auto& it : tr.iterates)
    {
        v_norm.push_back(it.v_norm);
        r_norm.push_back(it.r_norm);
        curvature.push_back(it.curvature);
        well_defined.push_back(it.well_defined);
    }
    py::dict d;
    d["termination"]   = to_string(tr.termination);
    d["output"]        = tr.output;
    d["iterations"]    = tr.iterations();
    d["v_norm"]        = v_norm;
    d["r_norm"]        = r_norm;
    d["curvature"]     = curvature;
    d["well_defined"]  = well_defined;
    d["on_boundary"]   = tr.on_boundary();
    d["theta_warning"] = tr.theta_warning;
    return d;
}

py::dict run_dict(const TrRunRecord& rec)
{
    std::vector< double > grad, f, delta, rho;
    std::vector< bool >   accepted;
    for (const auto& it : rec.iterations)
    {
        grad.push_back(it.grad_norm);
        f.push_back(it.f);
        delta.push_back(it.delta);
        if (it.has_step)
        {
            rho.push_back(it.rho);
            accepted.push_back(it.accepted);
        }
    }
    py::dict d;
    d["status"]           = to_string(rec.status);
    d["outer_iterations"] = rec.outer_iterations();
    d["x"]                = rec.x_final;
    d["f"]                = rec.f_final;
    d["grad_norm"]        = rec.grad_norm_final;
    d["grad_norms"]       = grad;
    d["f_values"]         = f;
    d["radii"]            = delta;
    d["rho"]              = rho;
    d["accepted"]         = accepted;
    d["message"]          = rec.message;
    return d;
}

TrConfig make_config(const std::string& solver, double rho_prime, double Delta_bar, std::optional< double > Delta_0,
                     int max_outer, double grad_tol, double kappa, double theta)
{
    TrConfig c;
    c.solver    = solver_from_string(solver);
    c.rho_prime = rho_prime;
    c.Delta_bar = Delta_bar;
    c.Delta_0   = Delta_0;
    c.max_outer = max_outer;
    c.grad_tol  = grad_tol;
    c.tcg       = make_tcg_params(kappa, theta, "truncated", -1);
    c.validate();
    return c;
}

py::object json_loads(const std::string& s)
{
    return py::module_::import("json").attr("loads")(s);
}
} // namespace

PYBIND11_MODULE(_tcglab, m)
{
    m.doc() = "Truncated CG trust-region solver and polynomial laboratory";

    py::register_exception< NumericalBreakdown >(m, "NumericalBreakdown", PyExc_ArithmeticError);
    py::register_exception< NotWellDefined >(m, "NotWellDefined", PyExc_ValueError);

    py::class_< SpectralMeasure >(m, "SpectralMeasure")
        .def(py::init< std::vector< double >, std::vector< double >, double >(), py::arg("eigenvalues"),
             py::arg("weights"), py::arg("negligible_weight") = 0.0)
        .def_property_readonly("eigenvalues", &SpectralMeasure::eigenvalues)
        .def_property_readonly("weights", &SpectralMeasure::weights)
        .def("__len__", &SpectralMeasure::size)
        .def("total_weight_sq", &SpectralMeasure::total_weight_sq);

    py::class_< SplitSpectralMeasure >(m, "SplitSpectralMeasure")
        .def(py::init< SpectralMeasure, SpectralMeasure >(), py::arg("head"), py::arg("tail"))
        .def_property_readonly("head", &SplitSpectralMeasure::head)
        .def_property_readonly("tail", &SplitSpectralMeasure::tail)
        .def_property_readonly("lambda_d", &SplitSpectralMeasure::lambda_d)
        .def("full", &SplitSpectralMeasure::full);

    m.def("clustered_split", &clustered_split);
    m.def(
        "random_split",
        [](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            return random_split(rng);
        },
        py::arg("seed"));
    m.def(
        "measure_from_matrix",
        [](const Matrix& a, const Vector& b) { return measure_from_operator(SymmetricOperator(a), b); },
        py::arg("A"), py::arg("b"));

    py::class_< JacobiRecurrence >(m, "JacobiRecurrence")
        .def_property_readonly("grade", &JacobiRecurrence::grade)
        .def("alpha", &JacobiRecurrence::alpha)
        .def("beta", &JacobiRecurrence::beta)
        .def("norm_sq", &JacobiRecurrence::norm_sq)
        .def("eval_monic", &JacobiRecurrence::eval_monic, py::arg("n"), py::arg("x"));

    py::class_< PolyHandle >(m, "Polynomial")
        .def_property_readonly("kind", [](const PolyHandle& p) { return to_string(p.kind()); })
        .def_property_readonly("degree", &PolyHandle::degree)
        .def("__call__", &PolyHandle::operator(), py::arg("x"))
        .def("norm_sq", &PolyHandle::norm_sq)
        .def("roots", &PolyHandle::roots);

    m.def("stieltjes", &stieltjes, py::arg("measure"));
    m.def("ritz_values", &ritz_values, py::arg("rec"), py::arg("n"));
    m.def("pi_poly", &pi_poly, py::arg("rec"), py::arg("n"));
    m.def("varsigma_poly", &varsigma_poly, py::arg("rec"), py::arg("n"));
    m.def("phi_poly", &phi_poly, py::arg("rec"), py::arg("m"));
    m.def("zeta", &zeta, py::arg("rec"), py::arg("n"), py::arg("lam"));
    m.def("xi", &xi, py::arg("rec"), py::arg("n"), py::arg("lam"));
    m.def("cg_objective", &cg_objective, py::arg("rec"), py::arg("n"));

    m.def(
        "sigma_system",
        [](const SplitSpectralMeasure& split, int n) {
            const auto s = sigma_system(split, n);
            py::dict   d;
            d["sigma"]           = s.sigma;
            d["sigma_l1"]        = s.sigma_l1;
            d["delta"]           = s.delta;
            d["tau"]             = s.tau;
            d["eta"]             = s.eta;
            d["omega"]           = s.omega;
            d["linear_residual"] = s.linear_residual;
            return d;
        },
        py::arg("split"), py::arg("n"));
    m.def("verify_rho_identity", &verify_rho_identity, py::arg("split"), py::arg("n"),
          py::arg("seed") = std::uint64_t{20240611});
    m.def(
        "root_displacement_bound",
        [](const SplitSpectralMeasure& split, int n) {
            const auto r = root_displacement_bound(split, n);
            return py::dict(py::arg("lhs") = r.lhs, py::arg("rhs") = r.rhs, py::arg("bound_holds") = r.bound_holds);
        },
        py::arg("split"), py::arg("n"));

    m.def(
        "tcg",
        [](const Matrix& a, const Vector& b, double delta, double kappa, double theta, const std::string& mode,
           int max_iterations) {
            return trace_dict(tcg(SymmetricOperator(a), b, delta, make_tcg_params(kappa, theta, mode, max_iterations)));
        },
        py::arg("A"), py::arg("b"), py::arg("delta"), py::arg("kappa") = 0.1, py::arg("theta") = 0.5,
        py::arg("mode") = "truncated", py::arg("max_iterations") = -1);
    m.def(
        "solve_trs_exact",
        [](const Matrix& a, const Vector& b, double delta) {
            const SymmetricOperator op(a);
            const auto              s = solve_trs_exact(op, b, delta);
            const auto              k = trs_kkt(op, b, delta, s);
            py::dict                d;
            d["step"]        = s.step;
            d["multiplier"]  = s.multiplier;
            d["on_boundary"] = s.on_boundary;
            d["hard_case"]   = s.hard_case;
            d["kkt_ok"]      = k.ok();
            return d;
        },
        py::arg("A"), py::arg("b"), py::arg("delta"));

    py::class_< ProblemDefinition >(m, "Problem")
        .def_readonly("name", &ProblemDefinition::name)
        .def_readonly("dim", &ProblemDefinition::dim)
        .def("f", [](const ProblemDefinition& p, const Vector& x) { return p.f(x); })
        .def("grad", [](const ProblemDefinition& p, const Vector& x) { return p.grad(x); })
        .def("hess", [](const ProblemDefinition& p, const Vector& x) { return Matrix(p.hess(x).dense()); });
    m.def("problem", &problem_by_name, py::arg("spec"));
    m.def("uniform_start", &uniform_start, py::arg("dim"), py::arg("seed"), py::arg("scale") = 2.0);

    m.def(
        "tr_minimize",
        [](const ProblemDefinition& p, const Vector& x0, const std::string& solver, double rho_prime,
           double Delta_bar, std::optional< double > Delta_0, int max_outer, double grad_tol, double kappa,
           double theta) {
            const auto cfg  = make_config(solver, rho_prime, Delta_bar, Delta_0, max_outer, grad_tol, kappa, theta);
            const auto rec  = tr_minimize(p, x0, cfg);
            py::dict   d    = run_dict(rec);
            d["conditions"] = json_loads(evaluate_conditions(rec, p, theta).to_json());
            return d;
        },
        py::arg("problem"), py::arg("x0"), py::arg("solver") = "tcg", py::arg("rho_prime") = 0.1,
        py::arg("Delta_bar") = 10.0, py::arg("Delta_0") = py::none(), py::arg("max_outer") = 100,
        py::arg("grad_tol") = 1e-9, py::arg("kappa") = 0.1, py::arg("theta") = 0.5);

    m.def("experiment_names", &experiment_names);
    m.def(
        "run_experiment",
        [](const std::string& name, const std::map< std::string, std::string >& params, std::uint64_t seed,
           const std::filesystem::path& out_dir) {
            ExperimentSpec spec;
            spec.name    = name;
            spec.params  = params;
            spec.seed    = seed;
            spec.out_dir = out_dir;
            const auto r = run_experiment(spec);
            return py::make_tuple(r.exit_code, json_loads(r.summary_json), r.files);
        },
        py::arg("name"), py::arg("params") = std::map< std::string, std::string >{},
        py::arg("seed") = std::uint64_t{20240611}, py::arg("out_dir") = std::filesystem::path("."));
}
