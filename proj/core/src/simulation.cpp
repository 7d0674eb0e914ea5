#include "msdybo/simulation.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

namespace msdybo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double cos_bump(double x, int k)
{
    return 1.0 - std::cos(2.0 * k * std::numbers::pi * x);
}

}  // namespace

void initial_fields(const GridPair& g, InitialCondition ic, Vector& mean, Matrix& modes)
{
    double mean_amp = 0.0;
    std::vector<std::pair<double, int>> terms;  // (amplitude, frequency)
    switch (ic) {
    case InitialCondition::Example1:
        mean_amp = 32.0;
        terms = {{24.0, 1}, {16.0, 2}, {8.0, 3}, {4.0, 4}};
        break;
    case InitialCondition::Example2:
        mean_amp = 4.0;
        terms = {{16.0, 2}, {4.0, 3}, {2.0, 4}};
        break;
    }
    mean = interpolate(g, [&](double x, double y) { return mean_amp * cos_bump(x, 1) * cos_bump(y, 1); });
    modes.resize(g.num_fine_nodes(), static_cast<Index>(terms.size()));
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const auto [amp, freq] = terms[k];
        modes.col(static_cast<Index>(k)) =
            interpolate(g, [&](double x, double y) { return amp * cos_bump(x, freq) * cos_bump(y, freq); });
    }
}

Problem make_problem(const GridPair& g, CoefficientModel model, double source, InitialCondition ic)
{
    Problem p{g, std::move(model), Vector::Constant(g.num_fine_nodes(), source), Vector(), Matrix()};
    initial_fields(p.grid, ic, p.mean0, p.modes0);
    return p;
}

Simulation::Simulation(const Problem& problem, const GpcSpace& gpc, RunSettings settings,
                       std::shared_ptr<const OfflineSpace> offline)
    : problem_(&problem), gpc_(&gpc), settings_(std::move(settings)), offline_(std::move(offline))
{
    require(settings_.dt > 0.0, "dt must be positive");
    require(settings_.steps >= 0, "steps must be nonnegative");
    require(gpc.r() == problem.model.r(), "gPC dimension r=" + std::to_string(gpc.r()) + " but the medium has " +
                                              std::to_string(problem.model.r()) + " fluctuation fields");
    const GridPair& g = problem.grid;
    const double c = 1.0 / settings_.dt;
    fine_ = fine_operators(g, problem.model, problem.source);
    const Vector mean = restrict_to(problem.mean0, g.interior_dofs());
    Matrix modes(fine_.size(), problem.modes0.cols());
    for (Index k = 0; k < modes.cols(); ++k) modes.col(k) = restrict_to(problem.modes0.col(k), g.interior_dofs());

    if (settings_.space == SpaceKind::Fine) {
        ops_ = assemble_operators(fine_);
        state_ = init_state(mean, modes, fine_.mass, nullptr, gpc, settings_.m);
        solve_ = make_system_solver(ops_, c);
        stepper_ = std::make_unique<DyboStepper>(ops_, gpc, settings_.dt, settings_.dybo);
        start_ = state_;
        return;
    }

    if (!offline_) {
        const auto t0 = Clock::now();
        offline_ = std::make_shared<const OfflineSpace>(
            settings_.l_counts.empty() ? build_offline_space(g, problem.model.mean(), settings_.l_per_node)
                                       : build_offline_space(g, problem.model.mean(), settings_.l_counts));
        times_.offline = seconds_since(t0);
    }
    const SparseMatrix& R = offline_->prolongation;
    require(R.rows() == fine_.size(), "offline space does not match the grid");
    state_ = init_state(mean, modes, fine_.mass, &R, gpc, settings_.m);

    if (!settings_.online) {
        ops_ = assemble_operators(R, fine_);
        solve_ = make_system_solver(ops_, c);
        stepper_ = std::make_unique<DyboStepper>(ops_, gpc, settings_.dt, settings_.dybo);
        fine_coordinates_ = false;
        start_ = state_;
        return;
    }

    // enriched runs keep the state in coefficients of [R | online columns of the last step]
    blocks_ = std::make_unique<ProjectedOperators>(R, fine_);
    stepper_ = std::make_unique<DyboStepper>(blocks_->operators(), gpc, settings_.dt, settings_.dybo);
    system_ = fine_.stiffness + c * fine_.mass;
    enriched_ = std::make_unique<EnrichedSpace>(R, system_, settings_.enrichment.drop_tolerance);
    context_ = std::make_unique<OnlineContext>(g, problem.model.mean());
    weights_.reserve(offline_->basis_counts.size());
    for (std::size_t i = 0; i < offline_->basis_counts.size(); ++i) {
        weights_.push_back(1.0 / offline_->next_eigenvalue(static_cast<Index>(i)));
    }
    if (settings_.energy_monitor) fine_system_ = std::make_unique<SpdSolver>(system_);
    fine_coordinates_ = false;
    start_ = state_;
}

Index Simulation::dimension() const
{
    if (enriched_) return enriched_->dimension();
    return ops_.dimension();
}

StepRecord Simulation::step()
{
    if (enriched_) return enriched_step();
    const auto t_step = Clock::now();
    StepRecord rec;

    auto t0 = Clock::now();
    const StepPlan plan = stepper_->plan(state_);
    double modes_time = seconds_since(t0);

    DyboState next;
    next.n = state_.n + 1;
    next.t = state_.t + settings_.dt;
    next.A = plan.a_next;
    t0 = Clock::now();
    next.u0 = solve_(plan.g1).col(0);
    times_.mean += seconds_since(t0);
    t0 = Clock::now();
    next.U = solve_(plan.g2);
    check_finite(next);
    start_ = next;
    state_ = stepper_->finish(std::move(next), plan.frozen, &rec.diagnostics);
    times_.modes += modes_time + seconds_since(t0);

    rec.n = state_.n;
    rec.t = state_.t;
    rec.dimension = dimension();
    times_.total += seconds_since(t_step);
    return rec;
}

StepRecord Simulation::enriched_step()
{
    const auto t_step = Clock::now();
    StepRecord rec;
    const double c = 1.0 / settings_.dt;
    const Index r = gpc_->r();

    // fine residuals of the mean (and, for All, the mode) equations drive the enrichment
    auto t0 = Clock::now();
    const bool all = settings_.enrichment.components == EnrichComponents::All;
    Matrix rhs;
    Vector fine_mean;
    if (all) {
        const StepPlan old = stepper_->plan(state_);
        const Index m = state_.modes();
        Matrix coarse(state_.u0.size(), 1 + m);
        coarse << state_.u0, state_.U;
        const Matrix fine = blocks_->prolong(coarse);
        fine_mean = fine.col(0);
        const auto Uf = fine.rightCols(m);
        const Matrix MU = fine_.mass * Uf;
        rhs.resize(fine_.size(), 1 + m);
        rhs.col(0) = c * (fine_.mass * fine_mean) + fine_.load;
        rhs.rightCols(m) = c * MU - MU * old.D.transpose();
        const Matrix& A = state_.A;
        for (Index i = 0; i < r; ++i) {
            const SparseMatrix& S = fine_.fluctuation_stiffness[static_cast<std::size_t>(i)];
            const RowVector& t0 = gpc_->first_moment(static_cast<int>(i));
            const Matrix& t1 = gpc_->second_moment(static_cast<int>(i));
            const Matrix SU = S * Uf;
            rhs.col(0) -= SU * (A.transpose() * t0.transpose());
            rhs.rightCols(m) -= (S * fine_mean) * (t0 * A) + SU * (A.transpose() * t1 * A);
        }
    } else {
        Matrix coarse(state_.u0.size(), 1 + r);
        coarse.col(0) = state_.u0;
        for (Index i = 0; i < r; ++i) {
            coarse.col(1 + i) = state_.U * (state_.A.transpose() * gpc_->first_moment(static_cast<int>(i)).transpose());
        }
        const Matrix fine = blocks_->prolong(coarse);
        fine_mean = fine.col(0);
        rhs = c * (fine_.mass * fine_mean) + fine_.load;
        for (Index i = 0; i < r; ++i) rhs -= fine_.fluctuation_stiffness[static_cast<std::size_t>(i)] * fine.col(1 + i);
    }

    Matrix shift;
    if (fine_previous_) {
        if (const auto prev = fine_previous_(state_.n)) {
            require(prev->size() == fine_.size(), "verification mean has the wrong size");
            shift = Matrix::Zero(rhs.rows(), rhs.cols());
            shift.col(0) = (fine_.mass * (*prev - fine_mean)) * c;
        }
    }
    Matrix reference;
    if (fine_system_) reference = fine_system_->solve(rhs);

    const int w = settings_.window;
    const Index carried = blocks_->online_columns();
    const Index before = enriched_->online_columns();
    const bool opens = w == 0 || state_.n == 0 || (w > 0 && state_.n % w == 0);
    if (opens) enriched_->reset();
    const Index kept = enriched_->online_columns();
    EnrichmentResult er = enrich(*enriched_, *context_, system_, rhs, settings_.enrichment, weights_,
                                 shift.size() ? &shift : nullptr, fine_system_ ? &reference : nullptr, nullptr,
                                 opens ? nullptr : &baseline_);
    if (opens) baseline_ = er.history.front().residual_sum;
    // the state basis is [R | carried]; append what the space holds beyond it
    const Index fresh = enriched_->online_columns() - (kept == before ? kept : 0);
    blocks_->append(SparseMatrix(enriched_->online().rightCols(fresh)));
    times_.enrichment += seconds_since(t0);
    rec.levels = std::move(er.history);
    rec.residual_increase = er.residual_increase;
    rec.energy_increase = er.energy_increase;

    // DyBO step in Ψ = [R | carried | fresh]; the solution lives in [R | space columns]
    t0 = Clock::now();
    DyboState padded = state_;
    const Index n_psi = blocks_->dimension();
    padded.u0.conservativeResize(n_psi);
    padded.u0.tail(n_psi - state_.u0.size()).setZero();
    padded.U.conservativeResize(n_psi, Eigen::NoChange);
    padded.U.bottomRows(n_psi - state_.U.rows()).setZero();
    const StepPlan plan = stepper_->plan(padded);
    double modes_time = seconds_since(t0);

    const Index n_off = blocks_->offline_dimension();
    const Index drop = kept == before ? 0 : carried;  // carried columns that left the space
    std::vector<Index> rows(static_cast<std::size_t>(n_off));
    std::iota(rows.begin(), rows.end(), Index{0});
    for (Index j = n_off + drop; j < n_psi; ++j) rows.push_back(j);

    DyboState next;
    next.n = state_.n + 1;
    next.t = state_.t + settings_.dt;
    next.A = plan.a_next;
    t0 = Clock::now();
    next.u0 = enriched_->solve_coefficients(Vector(plan.g1(rows))).col(0);
    times_.mean += seconds_since(t0);
    t0 = Clock::now();
    next.U = enriched_->solve_coefficients(Matrix(plan.g2(rows, Eigen::all)));
    start_ = next;
    start_.u0 = enriched_->solve_offline_coefficients(Vector(plan.g1.head(n_off))).col(0);
    start_.U = enriched_->solve_offline_coefficients(Matrix(plan.g2.topRows(n_off)));
    check_finite(next);
    blocks_->drop_leading(drop);
    state_ = stepper_->finish(std::move(next), plan.frozen, &rec.diagnostics);
    times_.modes += modes_time + seconds_since(t0);

    rec.n = state_.n;
    rec.t = state_.t;
    rec.dimension = dimension();
    times_.total += seconds_since(t_step);
    return rec;
}

namespace {

DyboState prolong_state(const DyboState& s, const SparseMatrix& R)
{
    DyboState f = s;
    f.u0 = R * s.u0;
    f.U = R * s.U;
    return f;
}

}  // namespace

DyboState Simulation::prolonged(const DyboState& s) const
{
    if (fine_coordinates_) return s;
    if (blocks_ && s.u0.size() == blocks_->dimension()) {
        DyboState f = s;
        const Matrix x = blocks_->prolong(s.U);
        f.u0 = blocks_->prolong(s.u0).col(0);
        f.U = x;
        return f;
    }
    return prolong_state(s, offline_->prolongation);
}

DyboState Simulation::fine_state() const
{
    return prolonged(state_);
}

DyboState Simulation::start_state() const
{
    return prolonged(start_);
}

}  // namespace msdybo
