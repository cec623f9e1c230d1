#include "tcglab/experiments.hpp"

#include "tcglab/csv.hpp"
#include "tcglab/problems.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace tcglab
{
namespace
{
using json = nlohmann::ordered_json;

class Params
{
public:
    Params(const ExperimentSpec& spec, std::set< std::string > allowed) : values_(spec.params)
    {
        for (const auto& [key, value] : values_)
            if (!allowed.count(key))
            {
                std::string list;
                for (const auto& a : allowed)
                    list += (list.empty() ? "" : ", ") + a;
                throw std::invalid_argument("unknown parameter '" + key + "' for " + spec.name + " (allowed: " + list +
                                            ")");
            }
    }

    [[nodiscard]] std::optional< std::string > get(const std::string& key) const
    {
        auto it = values_.find(key);
        if (it == values_.end())
            return std::nullopt;
        return it->second;
    }
    [[nodiscard]] std::string str(const std::string& key, const std::string& def) const
    {
        return get(key).value_or(def);
    }
    [[nodiscard]] double num(const std::string& key, double def) const
    {
        const auto v = get(key);
        return v ? csv::parse_double(*v) : def;
    }
    [[nodiscard]] std::optional< double > opt_num(const std::string& key) const
    {
        const auto v = get(key);
        if (!v)
            return std::nullopt;
        return csv::parse_double(*v);
    }
    [[nodiscard]] int integer(const std::string& key, int def) const
    {
        const auto v = get(key);
        if (!v)
            return def;
        std::size_t pos = 0;
        const int   out = std::stoi(*v, &pos);
        if (pos != v->size())
            throw std::invalid_argument("parameter " + key + " must be an integer: " + *v);
        return out;
    }
    [[nodiscard]] std::vector< double > list(const std::string& key, std::vector< double > def) const
    {
        const auto v = get(key);
        if (!v)
            return def;
        std::vector< double > out;
        for (const auto& field : csv::split_line(*v))
            out.push_back(csv::parse_double(field));
        return out;
    }

private:
    std::map< std::string, std::string > values_;
};

class Output
{
public:
    explicit Output(const ExperimentSpec& spec) : dir_(spec.out_dir) { std::filesystem::create_directories(dir_); }

    std::ofstream open(const std::string& name)
    {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot write " + (dir_ / name).string());
        files_.push_back(name);
        return f;
    }
    void json_file(const std::string& name, const json& j)
    {
        auto f = open(name);
        f << j.dump(2) << '\n';
    }
    [[nodiscard]] std::vector< std::string > files() const { return files_; }

private:
    std::filesystem::path      dir_;
    std::vector< std::string > files_;
};

SplitSpectralMeasure load_split(const Params& p)
{
    const auto file = p.get("measure");
    if (!file)
        return clustered_split();
    auto m = read_measure_csv_file(*file);
    if (auto* s = std::get_if< SplitSpectralMeasure >(&m))
        return *s;
    throw std::invalid_argument("measure file " + *file + " has no head/tail split (needs a `part` column)");
}

TcgParams tcg_params(const Params& p)
{
    TcgParams t;
    t.kappa = p.num("kappa", t.kappa);
    t.theta = p.num("theta", t.theta);
    t.validate();
    return t;
}

TrConfig tr_config(const Params& p)
{
    TrConfig c;
    c.rho_prime = p.num("rho_prime", c.rho_prime);
    c.Delta_bar = p.num("Delta_bar", c.Delta_bar);
    c.Delta_0   = p.opt_num("Delta_0");
    c.max_outer = p.integer("max_outer", c.max_outer);
    c.grad_tol  = p.num("grad_tol", c.grad_tol);
    c.solver    = solver_from_string(p.str("solver", "tcg"));
    c.tcg       = tcg_params(p);
    const std::string h = p.str("hessian", "exact");
    if (h == "exact")
        c.hessian = HessianMode::exact;
    else if (h == "fd")
        c.hessian = HessianMode::finite_difference;
    else
        throw std::invalid_argument("hessian must be exact or fd");
    c.validate();
    return c;
}

const std::set< std::string > tr_keys = {"problem",  "solver",   "kappa",   "theta", "rho_prime",
                                         "Delta_bar", "Delta_0", "max_outer", "grad_tol", "hessian"};

std::set< std::string > with(std::set< std::string > base, std::initializer_list< std::string > extra)
{
    base.insert(extra);
    return base;
}

Vector solution_center(const ProblemDefinition& problem, std::uint64_t seed)
{
    if (!problem.has_solution_set())
        throw std::invalid_argument("problem " + problem.name + " has no solution-set parametrization");
    return problem.solution_point(uniform_start(problem.solution_param_dim, seed));
}

ExperimentResult cmd_cg_dynamics(const ExperimentSpec& spec)
{
    const Params p(spec, {"measure", "max_n", "delta", "kappa", "theta"});
    const auto   split = load_split(p);
    const int    max_n = p.integer("max_n", 11);
    const double delta = p.num("delta", 1e3);
    const auto   dyn   = cg_dynamics(split, max_n, delta, tcg_params(p));

    Output out(spec);
    {
        auto        f = out.open("cg_dynamics.csv");
        csv::Writer w(f);
        w.header({"n", "tilde_v_norm", "tilde_r_norm", "tilde_well_defined", "v_norm", "r_norm"});
        for (const auto& r : dyn.rows)
        {
            w.field(r.n).field(r.tilde_v_norm).field(r.tilde_r_norm).field(r.tilde_well_defined);
            if (r.has_head)
                w.field(r.v_norm).field(r.r_norm);
            else
                w.field("").field("");
            w.end_row();
        }
    }
    {
        auto        f = out.open("ritz_values.csv");
        csv::Writer w(f);
        w.header({"n", "index", "ritz_tilde"});
        for (std::size_t n = 0; n < dyn.ritz_tilde.size(); ++n)
            for (std::size_t i = 0; i < dyn.ritz_tilde[n].size(); ++i)
            {
                w.field(static_cast< int >(n + 1)).field(static_cast< int >(i)).field(dyn.ritz_tilde[n][i]);
                w.end_row();
            }
    }
    {
        std::vector< SigmaDiagnosticsRow > rows;
        json                               failures = json::array();
        for (int n = 1; n <= static_cast< int >(stieltjes(split.head()).grade()); ++n)
        {
            try
            {
                rows.push_back(sigma_diagnostics(split, n));
            }
            catch (const std::exception& e)
            {
                failures.push_back({{"n", n}, {"error", e.what()}});
            }
        }
        auto f = out.open("sigma_diagnostics.csv");
        write_sigma_diagnostics_csv(f, rows);
    }
    {
        auto f = out.open("tcg_trace.csv");
        write_trace_csv(f, dyn.tcg_trace);
    }

    json j;
    j["command"]         = "cg-dynamics";
    j["max_n"]           = max_n;
    j["max_tilde_v"]     = dyn.max_tilde_v;
    j["max_v"]           = dyn.max_v;
    j["explosion_ratio"] = dyn.max_v > 0.0 ? dyn.max_tilde_v / dyn.max_v : 0.0;
    j["early_stop_n"]    = dyn.early_stop_n;
    j["v_ref"]           = dyn.v_ref;
    j["tcg"] = {{"delta", delta},
                {"termination", to_string(dyn.tcg_trace.termination)},
                {"iterations", dyn.tcg_trace.iterations()},
                {"output_norm", dyn.tcg_output_norm}};
    out.json_file("summary.json", j);
    return {0, j.dump(2), out.files()};
}

ExperimentResult cmd_tr_run(const ExperimentSpec& spec)
{
    const Params   p(spec, with(tr_keys, {"init", "eps", "scale"}));
    const auto     problem = problem_by_name(p.str("problem", "sine-lsq:n=100"));
    const TrConfig cfg     = tr_config(p);
    const std::string init = p.str("init", "uniform");
    Vector            x0;
    if (init == "uniform")
        x0 = uniform_start(problem.dim, spec.seed, p.num("scale", 2.0));
    else if (init == "path")
    {
        if (problem.dim != 2)
            throw std::invalid_argument("init=path is only defined for remark2d");
        x0 = remark_path(p.num("eps", 1e-3));
    }
    else
        throw std::invalid_argument("init must be uniform or path");

    const TrRunRecord     run  = tr_minimize(problem, x0, cfg);
    const ConditionReport cond = evaluate_conditions(run, problem, cfg.tcg.theta);

    Output out(spec);
    {
        auto f = out.open("run.csv");
        write_run_csv(f, run);
    }
    {
        auto f = out.open("conditions.json");
        f << cond.to_json() << '\n';
    }
    json j;
    j["command"]          = "tr-run";
    j["problem"]          = problem.name;
    j["solver"]           = to_string(cfg.solver);
    j["status"]           = to_string(run.status);
    j["outer_iterations"] = run.outer_iterations();
    j["boundary_steps"]   = run.boundary_step_count();
    j["grad_norm_final"]  = run.grad_norm_final;
    j["f_final"]          = run.f_final;
    if (cond.order_estimate)
        j["order_estimate"] = *cond.order_estimate;
    else
        j["order_estimate"] = nullptr;
    if (problem.has_solution_set() && problem.dim == 2 && problem.name == "remark2d")
        j["distance_to_c0"] = (run.x_final - remark_path(0.0)).norm();
    if (!run.message.empty())
        j["message"] = run.message;
    out.json_file("summary.json", j);
    const bool ok = run.status == TrStatus::converged;
    return {ok ? 0 : 1, j.dump(2), out.files()};
}

ExperimentResult cmd_sigma_check(const ExperimentSpec& spec)
{
    const Params p(spec, {"measure", "random"});
    const int    random = p.integer("random", 0);
    std::vector< SigmaCheckRow > rows;
    if (random > 0)
    {
        if (p.get("measure"))
            throw std::invalid_argument("sigma-check: give either measure or random, not both");
        std::mt19937_64 rng(spec.seed);
        for (int i = 0; i < random; ++i)
        {
            const auto r = sigma_check(random_split(rng), "random-" + std::to_string(i));
            rows.insert(rows.end(), r.begin(), r.end());
        }
    }
    else
        rows = sigma_check(load_split(p), p.str("measure", "clustered"));

    Output out(spec);
    int    failures = 0, comparisons = 0;
    {
        auto        f = out.open("sigma_check.csv");
        csv::Writer w(f);
        w.header({"instance", "n", "identity_residual", "sigma_l1", "displacement_lhs", "displacement_rhs",
                  "displacement_ok", "iterate_status", "ok"});
        for (const auto& r : rows)
        {
            w.field(r.instance).field(r.n).field(r.identity_residual).field(r.sigma_l1).field(r.displacement_lhs);
            w.field(r.displacement_rhs).field(r.displacement_ok).field(r.iterate_status).field(r.ok);
            w.end_row();
            failures += r.ok ? 0 : 1;
            comparisons += r.iterate_status == "ok" || r.iterate_status == "fail" ? 1 : 0;
        }
    }
    json j;
    j["command"]             = "sigma-check";
    j["rows"]                = rows.size();
    j["failures"]            = failures;
    j["iterate_comparisons"] = comparisons;
    out.json_file("summary.json", j);
    return {failures == 0 ? 0 : 1, j.dump(2), out.files()};
}

ExperimentResult cmd_remark_asymptotics(const ExperimentSpec& spec)
{
    const Params p(spec, {"eps"});
    const auto   rows = remark_asymptotics(p.list("eps", {1e-3, 1e-4, 1e-5, 1e-6}));
    Output       out(spec);
    {
        auto        f = out.open("remark_asymptotics.csv");
        csv::Writer w(f);
        w.header({"eps", "r1_over_eps", "grad_sq_over_eps", "eps_v2", "well_defined", "deviation"});
        for (const auto& r : rows)
        {
            w.field(r.eps).field(r.r1_ratio).field(r.grad_ratio).field(r.v2_ratio).field(r.well_defined);
            w.field(r.deviation);
            w.end_row();
        }
    }
    json j;
    j["command"] = "remark-asymptotics";
    j["limits"]  = {1.0, 0.25, 1.0 / 6.0};
    json dev     = json::array();
    for (const auto& r : rows)
        dev.push_back({{"eps", r.eps}, {"deviation", r.deviation}, {"well_defined", r.well_defined}});
    j["rows"] = dev;
    out.json_file("summary.json", j);
    const bool all_defined = std::all_of(rows.begin(), rows.end(), [](const RemarkRow& r) { return r.well_defined; });
    return {all_defined ? 0 : 1, j.dump(2), out.files()};
}

ExperimentResult cmd_capture(const ExperimentSpec& spec)
{
    const Params   p(spec, with(tr_keys, {"radius_start", "radius_stay", "trials"}));
    const auto     problem = problem_by_name(p.str("problem", "sine-lsq:n=100"));
    const TrConfig cfg     = tr_config(p);
    const Vector   center  = solution_center(problem, spec.seed);
    const auto     rep     = capture_experiment(problem, center, p.num("radius_start", 1e-2), p.num("radius_stay", 1e-1),
                                                p.integer("trials", 20), cfg, spec.seed + 1);
    Output         out(spec);
    {
        auto        f = out.open("capture.csv");
        csv::Writer w(f);
        w.header({"trial", "captured", "converged", "max_distance", "first_step_boundary", "first_step_ratio",
                  "boundary_steps", "outer_iterations", "c1_max_tail", "final_grad_norm"});
        for (std::size_t t = 0; t < rep.trials.size(); ++t)
        {
            const auto& tr = rep.trials[t];
            w.field(static_cast< int >(t)).field(tr.captured).field(tr.converged).field(tr.max_distance);
            w.field(tr.first_step_boundary).field(tr.first_step_ratio).field(tr.boundary_steps);
            w.field(tr.outer_iterations).field(tr.c1_max_tail).field(tr.final_grad_norm);
            w.end_row();
        }
    }
    json j;
    j["command"]                      = "capture";
    j["problem"]                      = problem.name;
    j["solver"]                       = to_string(cfg.solver);
    j["capture_rate"]                 = rep.rate;
    j["boundary_first_step_fraction"] = rep.boundary_first_step_fraction;
    j["c1_max_tail"]                  = rep.c1_max_tail;
    if (problem.pl_constant)
        j["c1_reference"] = 10.0 / *problem.pl_constant;
    out.json_file("summary.json", j);
    return {0, j.dump(2), out.files()};
}
} // namespace

Vector uniform_start(Index dim, std::uint64_t seed, double scale)
{
    std::mt19937_64                          rng(seed);
    std::uniform_real_distribution< double > unif(-scale, scale);
    Vector                                   x(dim);
    for (Index i = 0; i < dim; ++i)
        x[i] = unif(rng);
    return x;
}

CgDynamics cg_dynamics(const SplitSpectralMeasure& split, int max_n, double delta, const TcgParams& params)
{
    if (max_n < 1)
        throw std::invalid_argument("cg_dynamics: max_n must be >= 1");
    const SpectralMeasure full  = split.full();
    const auto            frec  = stieltjes(full);
    const auto            hrec  = stieltjes(split.head());
    const int             n_til = std::min(max_n, frec.grade());
    const int             n_hd  = std::min(max_n, hrec.grade());

    const SymmetricOperator at = SymmetricOperator::diagonal(full.eigenvalue_vector());
    const Vector            bt = full.weight_vector();
    const SymmetricOperator a  = SymmetricOperator::diagonal(split.head().eigenvalue_vector());
    const Vector            b  = split.head().weight_vector();

    const TcgTrace tt = plain_cg(at, bt, n_til);
    const TcgTrace th = plain_cg(a, b, n_hd);

    CgDynamics out;
    for (int n = 1; n <= tt.iterations(); ++n)
    {
        CgDynamicsRow row;
        row.n                  = n;
        row.tilde_v_norm       = tt.iterates[static_cast< std::size_t >(n)].v_norm;
        row.tilde_r_norm       = tt.iterates[static_cast< std::size_t >(n)].r_norm;
        row.tilde_well_defined = tt.iterates[static_cast< std::size_t >(n)].well_defined;
        if (n <= th.iterations())
        {
            row.has_head = true;
            row.v_norm   = th.iterates[static_cast< std::size_t >(n)].v_norm;
            row.r_norm   = th.iterates[static_cast< std::size_t >(n)].r_norm;
            out.max_v    = std::max(out.max_v, row.v_norm);
        }
        out.max_tilde_v = std::max(out.max_tilde_v, row.tilde_v_norm);
        if (out.early_stop_n < 0 && n <= 10 && row.has_head && row.tilde_r_norm <= 2e-3 &&
            row.tilde_v_norm <= 2.0 * row.v_norm)
            out.early_stop_n = n;
        out.rows.push_back(row);
        out.ritz_tilde.push_back(ritz_values(frec, n));
    }
    out.v_ref           = (b.array() / split.head().eigenvalue_vector().array()).matrix().norm();
    out.tcg_trace       = tcg(at, bt, delta, params);
    out.tcg_output_norm = out.tcg_trace.output.norm();
    return out;
}

std::vector< SigmaCheckRow > sigma_check(const SplitSpectralMeasure& split, const std::string& label)
{
    std::vector< SigmaCheckRow > rows;
    const int                    grade = stieltjes(split.head()).grade();
    for (int n = 1; n <= grade; ++n)
    {
        SigmaCheckRow r;
        r.instance          = label;
        r.n                 = n;
        r.identity_residual = verify_rho_identity(split, n);
        const auto rd       = root_displacement_bound(split, n);
        r.sigma_l1          = rd.rhs;
        r.displacement_lhs  = rd.lhs;
        r.displacement_rhs  = rd.rhs;
        r.displacement_ok   = rd.bound_holds && rd.lower_bound_holds;
        bool iterate_ok     = true;
        if (r.sigma_l1 >= 1.0)
            r.iterate_status = "skipped";
        else
        {
            try
            {
                const auto ic    = iterate_comparison(split, n);
                iterate_ok       = ic.head_ok && ic.tail_bounds_ok;
                r.iterate_status = iterate_ok ? "ok" : "fail";
            }
            catch (const NotWellDefined&)
            {
                r.iterate_status = "not_well_defined";
            }
        }
        r.ok = r.identity_residual <= 1e-7 && r.displacement_ok && iterate_ok;
        rows.push_back(r);
    }
    return rows;
}

std::vector< RemarkRow > remark_asymptotics(const std::vector< double >& eps_grid)
{
    const auto               problem = problem_remark_counterexample();
    std::vector< RemarkRow > rows;
    for (double eps : eps_grid)
    {
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("remark_asymptotics: eps must lie in (0, 1)");
        RemarkRow    row;
        const Vector x  = remark_path(eps);
        const Vector g  = problem.grad(x);
        const auto   tr = plain_cg(problem.hess(x), -g, 2);
        row.eps         = eps;
        row.grad_ratio  = g.squaredNorm() / eps;
        row.well_defined = tr.iterations() == 2 && tr.iterates[2].well_defined;
        if (tr.iterations() >= 1)
            row.r1_ratio = tr.iterates[1].r_norm / eps;
        if (tr.iterations() == 2)
            row.v2_ratio = eps * tr.iterates[2].v_norm;
        row.deviation = std::max({std::abs(row.r1_ratio - 1.0), std::abs(row.grad_ratio - 0.25) / 0.25,
                                  std::abs(row.v2_ratio - 1.0 / 6.0) * 6.0});
        rows.push_back(row);
    }
    return rows;
}

const std::vector< std::string >& experiment_names()
{
    static const std::vector< std::string > names = {"cg-dynamics", "tr-run", "sigma-check", "remark-asymptotics",
                                                     "capture"};
    return names;
}

ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    if (spec.name == "cg-dynamics")
        return cmd_cg_dynamics(spec);
    if (spec.name == "tr-run")
        return cmd_tr_run(spec);
    if (spec.name == "sigma-check")
        return cmd_sigma_check(spec);
    if (spec.name == "remark-asymptotics")
        return cmd_remark_asymptotics(spec);
    if (spec.name == "capture")
        return cmd_capture(spec);
    throw std::invalid_argument("unknown command: " + spec.name);
}
} // namespace tcglab
