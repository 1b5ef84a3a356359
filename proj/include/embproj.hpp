#pragma once

#include "embproj/axis.hpp"
#include "embproj/bookmark.hpp"
#include "embproj/error.hpp"
#include "embproj/ingest.hpp"
#include "embproj/knn.hpp"
#include "embproj/matrix.hpp"
#include "embproj/pca.hpp"
#include "embproj/selection.hpp"
#include "embproj/tsne.hpp"
