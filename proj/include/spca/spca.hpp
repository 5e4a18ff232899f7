#pragma once

#include <spca/classify.hpp>
#include <spca/datamat.hpp>
#include <spca/errors.hpp>
#include <spca/metrics.hpp>
#include <spca/pipeline.hpp>
#include <spca/prox.hpp>
#include <spca/sparse_pca.hpp>
