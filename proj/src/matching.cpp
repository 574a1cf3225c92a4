#include <algorithm>
#include <limits>
#include <stdexcept>

#include "robin/linalg.hpp"

namespace robin {

std::vector<int> hungarian_assignment(const std::vector<std::vector<double>>& cost)
{
    const int n = static_cast<int>(cost.size());
    if (n == 0) return {};
    const int m = static_cast<int>(cost[0].size());
    if (n > m) throw std::invalid_argument("hungarian_assignment: needs rows <= cols");
    const double inf = std::numeric_limits<double>::infinity();
    // potentials u (rows), v (cols); p[j] = row matched to column j (1-based, 0 = none)
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) assignment[p[j] - 1] = j - 1;
    return assignment;
}

EigenMatching match_eigenvalues(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    if (a.size() > b.size()) throw std::invalid_argument("match_eigenvalues: first list must not be longer");
    std::vector<std::vector<double>> cost(a.size(), std::vector<double>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) cost[i][j] = std::abs(a[i] - b[j]);
    EigenMatching m;
    m.partner = hungarian_assignment(cost);
    for (std::size_t i = 0; i < a.size(); ++i) m.max_distance = std::max(m.max_distance, cost[i][m.partner[i]]);
    return m;
}

} // namespace robin
