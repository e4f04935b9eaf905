/*
 Copyright 2026 The thruster-biped Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef BIPED_BEZIER_HPP
#define BIPED_BEZIER_HPP

#include <Eigen/Core>

namespace biped {

/// Vector-valued Bezier curve; one row per output, one column per control point.
template <int Rows>
class Bezier {
public:
    using Coeffs = Eigen::Matrix<double, Rows, Eigen::Dynamic>;
    using Value = Eigen::Matrix<double, Rows, 1>;

    Bezier() = default;
    explicit Bezier(Coeffs c) : c_(std::move(c)) {}

    int degree() const { return static_cast<int>(c_.cols()) - 1; }
    const Coeffs& coeffs() const { return c_; }

    Value value(double s) const { return casteljau(c_, s); }

    Value derivative(double s) const {
        const int m = degree();
        if (m < 1) return Value::Zero(c_.rows());
        const Coeffs d = m * (c_.rightCols(m) - c_.leftCols(m));
        return casteljau(d, s);
    }

    Value second_derivative(double s) const {
        const int m = degree();
        if (m < 2) return Value::Zero(c_.rows());
        const Coeffs dd = m * (m - 1) *
            (c_.rightCols(m - 1) - 2.0 * c_.middleCols(1, m - 1) + c_.leftCols(m - 1));
        return casteljau(dd, s);
    }

private:
    static Value casteljau(Coeffs pts, double s) {
        for (Eigen::Index n = pts.cols() - 1; n > 0; --n)
            for (Eigen::Index i = 0; i < n; ++i)
                pts.col(i) = (1.0 - s) * pts.col(i) + s * pts.col(i + 1);
        return pts.col(0);
    }

    Coeffs c_;
};

}  // namespace biped

#endif  // BIPED_BEZIER_HPP
