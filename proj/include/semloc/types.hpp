#pragma once

#include <cstdint>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace semloc {

using Vec2d = Eigen::Vector2d;
using Vec3d = Eigen::Vector3d;
using Mat3d = Eigen::Matrix3d;
using Vec6d = Eigen::Matrix<double, 6, 1>;
using Mat6d = Eigen::Matrix<double, 6, 6>;
using MatXd = Eigen::MatrixXd;
using VecXd = Eigen::VectorXd;
using Quatd = Eigen::Quaterniond;

/// Semantic class label. 0 is reserved for void/unlabeled and never enters a graph.
using ClassId = int;

/// Vertex identifier, unique within one graph.
using VertexId = int;

/// Row-major image grids indexed as (row v, col u).
using LabelGrid = Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DepthGrid = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace semloc
