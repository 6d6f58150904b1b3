// Level sets of the maximal function of a disk: perimeter of {M > lambda}
// against lambda for both operators, next to the lambda^(-1/2) profile.

#include <cstdio>

#include <maxvar/maxvar.hpp>

using namespace maxvar;

int main(int argc, char** argv)
{
    const Index n = argc > 1 ? std::stol(argv[1]) : 256;
    const auto g = GridGeometry::cube(2, n);
    const Ball disk{{0.5, 0.5}, 0.05};
    const auto e = rasterize(g, disk);
    const auto omega = Domain::free_space(g);
    const auto lambdas = logspace(0.03, 0.5, 10);

    const auto dy = MaximalOperator::dyadic().apply(e, omega);
    const auto un = MaximalOperator::uncentered(RadiusSchedule::default_for(g)).apply(e, omega);
    const auto p_dy = level_set_perimeters(dy, omega, lambdas);
    const auto p_un = level_set_perimeters(un, omega, lambdas);

    const double base = perimeter(e);
    std::printf("disk r = %.3f on %ld^2, Per(E) = %.4f\n", disk.radius, static_cast<long>(n), base);
    std::printf("%10s %12s %12s %12s\n", "lambda", "dyadic", "uncentered", "Per/sqrt(l)");
    for (std::size_t i = 0; i < lambdas.size(); ++i)
        std::printf("%10.4f %12.4f %12.4f %12.4f\n", lambdas[i], p_dy[i], p_un[i], base / std::sqrt(lambdas[i]));
    std::printf("variation: dyadic %.4f, uncentered %.4f\n", variation_coarea(dy, omega), variation_coarea(un, omega));
}
