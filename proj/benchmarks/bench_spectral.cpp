#include <benchmark/benchmark.h>

#include <cmath>

#include "lwsw/energy.hpp"
#include "lwsw/evolve.hpp"
#include "lwsw/minimize.hpp"

namespace {

lwsw::CouplingParams two_wave_params(double lambda) {
    lwsw::CouplingParams cp;
    cp.N = 2;
    cp.alpha = {-1.0, -0.8};
    cp.beta = {-1.0, -0.6};
    cp.d = 1.0;
    cp.lambda = lambda;
    return cp;
}

lwsw::Profile bump_profile(const lwsw::GridPtr& g, const lwsw::CouplingParams& cp) {
    lwsw::Profile p = lwsw::zero_profile(g, cp.N);
    for (int i = 0; i < g->M; ++i) {
        const double s = 1.0 / std::cosh(g->x[i]);
        for (auto& u : p.u) u.v[i] = s;
        p.v.v[i] = s * s;
    }
    return lwsw::scale_to_constraint(p, cp);
}

void BM_Deriv(benchmark::State& state) {
    auto g = lwsw::make_grid(40.0, static_cast<int>(state.range(0)));
    lwsw::RealField f = lwsw::real_field(g);
    for (int i = 0; i < g->M; ++i) f.v[i] = std::exp(-g->x[i] * g->x[i]);
    for (auto _ : state) benchmark::DoNotOptimize(lwsw::deriv(f, 2));
}
BENCHMARK(BM_Deriv)->Arg(256)->Arg(1024)->Arg(4096);

void BM_DealiasedProduct(benchmark::State& state) {
    auto g = lwsw::make_grid(40.0, static_cast<int>(state.range(0)));
    lwsw::RealField f = lwsw::real_field(g);
    for (int i = 0; i < g->M; ++i) f.v[i] = 1.0 / std::cosh(g->x[i]);
    for (auto _ : state) benchmark::DoNotOptimize(lwsw::dealiased_product(f, f));
}
BENCHMARK(BM_DealiasedProduct)->Arg(256)->Arg(1024)->Arg(4096);

void BM_HelmholtzSolve(benchmark::State& state) {
    auto g = lwsw::make_grid(40.0, static_cast<int>(state.range(0)));
    lwsw::RealField f = lwsw::real_field(g);
    for (int i = 0; i < g->M; ++i) f.v[i] = std::exp(-g->x[i] * g->x[i]);
    for (auto _ : state) benchmark::DoNotOptimize(lwsw::helmholtz_solve(f, 1.0));
}
BENCHMARK(BM_HelmholtzSolve)->Arg(1024)->Arg(4096);

void BM_Energy(benchmark::State& state) {
    auto cp = two_wave_params(8.0);
    auto g = lwsw::make_grid(40.0, static_cast<int>(state.range(0)));
    auto p = bump_profile(g, cp);
    for (auto _ : state) benchmark::DoNotOptimize(lwsw::energy(p, cp));
}
BENCHMARK(BM_Energy)->Arg(1024)->Arg(4096);

void BM_GradEnergy(benchmark::State& state) {
    auto cp = two_wave_params(8.0);
    auto g = lwsw::make_grid(40.0, static_cast<int>(state.range(0)));
    auto p = bump_profile(g, cp);
    for (auto _ : state) benchmark::DoNotOptimize(lwsw::grad_energy(p, cp));
}
BENCHMARK(BM_GradEnergy)->Arg(1024)->Arg(4096);

void BM_ElResidual(benchmark::State& state) {
    auto cp = two_wave_params(8.0);
    auto g = lwsw::make_grid(40.0, static_cast<int>(state.range(0)));
    auto p = bump_profile(g, cp);
    const double mu = lwsw::lagrange_multiplier(p, cp);
    for (auto _ : state) benchmark::DoNotOptimize(lwsw::el_residual(p, mu, cp));
}
BENCHMARK(BM_ElResidual)->Arg(1024)->Arg(4096);

void BM_EvolveStep(benchmark::State& state) {
    auto cp = two_wave_params(8.0);
    auto g = lwsw::make_grid(40.0, static_cast<int>(state.range(0)));
    auto p = bump_profile(g, cp);
    lwsw::WaveParams w;
    w.c = 1.0;
    w.k = 0.5;
    w.sigma = 1.0;
    w.omega = w.sigma - w.k * w.k;
    auto s0 = lwsw::synthesize_initial(p, w);
    lwsw::EvolveOptions eo;
    eo.T = 1e-3;
    eo.dt = 1e-3;
    for (auto _ : state) benchmark::DoNotOptimize(lwsw::evolve(s0, cp, eo));
}
BENCHMARK(BM_EvolveStep)->Arg(1024)->Arg(4096);

} // namespace

BENCHMARK_MAIN();
