# Core model: metric spaces, cyclic representations, certification and Picard iteration
