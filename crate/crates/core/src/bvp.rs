// bvp: implemented next
